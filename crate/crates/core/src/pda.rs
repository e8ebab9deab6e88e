//! Placement delivery arrays: storage, the MN construction, and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::combinatorics::{binomial, rank_subset, subsets};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Star,
    Code(u32),
}

impl Cell {
    pub fn is_star(self) -> bool {
        matches!(self, Cell::Star)
    }

    pub fn code(self) -> Option<u32> {
        match self {
            Cell::Star => None,
            Cell::Code(s) => Some(s),
        }
    }
}

/// An `F x K` array of stars and integer codes, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdaArray {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdaParams {
    pub users: usize,
    pub subpacketization: usize,
    pub stars_per_column: usize,
    pub codes: usize,
    pub regularity: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Full,
    /// C2 and C3 only; used for user-delivery arrays whose star counts vary.
    DeliveryOnly,
}

/// A single broken condition. Coordinates are 0-based `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Column star count differs from the count of column 0.
    StarCount {
        col: usize,
        expected: usize,
        found: usize,
    },
    /// Code value in `[1, S]` that never appears.
    MissingCode(u32),
    /// Code 0 is not a valid index.
    ZeroCode { row: usize, col: usize },
    SameRow {
        code: u32,
        a: (usize, usize),
        b: (usize, usize),
    },
    SameColumn {
        code: u32,
        a: (usize, usize),
        b: (usize, usize),
    },
    /// One of the two crossing cells of an equal-code pair is not a star.
    Crossing {
        code: u32,
        a: (usize, usize),
        b: (usize, usize),
        cell: (usize, usize),
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl PdaArray {
    pub fn new(rows: usize, cols: usize, cells: Vec<Cell>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "array dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if cells.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {rows}x{cols} array",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_rows(rows: Vec<Vec<Cell>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        self.cells[row * self.cols + col] = cell;
    }

    pub fn column_star_count(&self, col: usize) -> usize {
        (0..self.rows).filter(|&f| self.get(f, col).is_star()).count()
    }

    /// Number of distinct code values.
    pub fn code_count(&self) -> usize {
        self.code_occurrences().len()
    }

    fn code_occurrences(&self) -> BTreeMap<u32, Vec<(usize, usize)>> {
        let mut occ: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for f in 0..self.rows {
            for k in 0..self.cols {
                if let Cell::Code(s) = self.get(f, k) {
                    occ.entry(s).or_default().push((f, k));
                }
            }
        }
        occ
    }

    /// `(K, F, Z, S)` plus regularity, when every column holds the same
    /// number of stars.
    pub fn params(&self) -> Option<PdaParams> {
        let z = self.column_star_count(0);
        if (1..self.cols).any(|k| self.column_star_count(k) != z) {
            return None;
        }
        Some(PdaParams {
            users: self.cols,
            subpacketization: self.rows,
            stars_per_column: z,
            codes: self.code_count(),
            regularity: regularity(self),
        })
    }

    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> PdaArray {
        let mut cells = Vec::with_capacity(self.cells.len());
        for &f in row_perm {
            for &k in col_perm {
                cells.push(self.get(f, k));
            }
        }
        PdaArray {
            rows: self.rows,
            cols: self.cols,
            cells,
        }
    }
}

/// The MN PDA for `user_count` users: rows are the `t`-subsets of the users in
/// lexicographic order, and cell `(T, k)` with `k ∉ T` holds the 1-based
/// lexicographic rank of `T ∪ {k}` among `(t+1)`-subsets.
pub fn build_mn_pda(user_count: usize, t: usize) -> Result<PdaArray> {
    if user_count == 0 {
        return Err(Error::InvalidParameter("user count must be positive".into()));
    }
    if t >= user_count {
        return Err(Error::InvalidParameter(format!(
            "t = {t} must be smaller than K = {user_count}"
        )));
    }
    let rows = binomial(user_count, t);
    let mut cells = Vec::with_capacity(rows * user_count);
    let mut merged = Vec::with_capacity(t + 1);
    for row in subsets(user_count, t) {
        for k in 0..user_count {
            if row.binary_search(&k).is_ok() {
                cells.push(Cell::Star);
            } else {
                merged.clear();
                merged.extend_from_slice(&row);
                let pos = merged.partition_point(|&x| x < k);
                merged.insert(pos, k);
                let rank = rank_subset(user_count, &merged) + 1;
                cells.push(Cell::Code(rank as u32));
            }
        }
    }
    PdaArray::new(rows, user_count, cells)
}

/// Check C1-C3 (or C2-C3 in delivery-only mode), collecting every violation.
pub fn validate_pda(arr: &PdaArray, mode: ValidationMode) -> ValidationReport {
    let mut violations = Vec::new();

    if mode == ValidationMode::Full {
        let expected = arr.column_star_count(0);
        for col in 1..arr.cols {
            let found = arr.column_star_count(col);
            if found != expected {
                violations.push(Violation::StarCount {
                    col,
                    expected,
                    found,
                });
            }
        }
    }

    let occ = arr.code_occurrences();
    if let Some(cells) = occ.get(&0) {
        for &(row, col) in cells {
            violations.push(Violation::ZeroCode { row, col });
        }
    }
    let max_code = occ.keys().next_back().copied().unwrap_or(0);
    for s in 1..=max_code {
        if !occ.contains_key(&s) {
            violations.push(Violation::MissingCode(s));
        }
    }

    for (&code, cells) in occ.iter().filter(|(&s, _)| s != 0) {
        for (i, &a) in cells.iter().enumerate() {
            for &b in &cells[i + 1..] {
                if a.0 == b.0 {
                    violations.push(Violation::SameRow { code, a, b });
                    continue;
                }
                if a.1 == b.1 {
                    violations.push(Violation::SameColumn { code, a, b });
                    continue;
                }
                for cell in [(a.0, b.1), (b.0, a.1)] {
                    if !arr.get(cell.0, cell.1).is_star() {
                        violations.push(Violation::Crossing { code, a, b, cell });
                    }
                }
            }
        }
    }

    ValidationReport { violations }
}

/// `g` when every code occurs exactly `g` times; `None` without codes or when
/// occurrence counts differ.
pub fn regularity(arr: &PdaArray) -> Option<usize> {
    let occ = arr.code_occurrences();
    let mut counts = occ.values().map(Vec::len);
    let g = counts.next()?;
    counts.all(|c| c == g).then_some(g)
}

impl fmt::Display for PdaArray {
    /// One line per row, `*` for stars, decimal codes, single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    f.write_str(" ")?;
                }
                match self.get(r, c) {
                    Cell::Star => f.write_str("*")?,
                    Cell::Code(s) => write!(f, "{s}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for PdaArray {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| match tok {
                    "*" => Ok(Cell::Star),
                    _ => tok.parse::<u32>().map(Cell::Code).map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: format!("bad token {tok:?}: {e}"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        PdaArray::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dedicated_three_q() -> PdaArray {
        "* 1 2\n1 * 3\n2 3 *\n".parse().unwrap()
    }

    #[test]
    fn mn_4_2_layout() {
        let p = build_mn_pda(4, 2).unwrap();
        // star rows per column, 1-based
        let stars: Vec<Vec<usize>> = (0..4)
            .map(|k| (0..6).filter(|&f| p.get(f, k).is_star()).map(|f| f + 1).collect())
            .collect();
        assert_eq!(
            stars,
            vec![vec![1, 2, 3], vec![1, 4, 5], vec![2, 4, 6], vec![3, 5, 6]]
        );
        assert_eq!(
            p.to_string(),
            "* * 1 2\n* 1 * 3\n* 2 3 *\n1 * * 4\n2 * 4 *\n3 4 * *\n"
        );
        assert!(validate_pda(&p, ValidationMode::Full).passed());
        assert_eq!(regularity(&p), Some(3));
    }

    #[test]
    fn mn_4_3_has_a_single_code() {
        let p = build_mn_pda(4, 3).unwrap();
        assert_eq!((p.rows(), p.cols()), (4, 4));
        let params = p.params().unwrap();
        assert_eq!(params.stars_per_column, 3);
        assert_eq!(params.codes, 1);
        for f in 0..4 {
            for k in 0..4 {
                let expected = if f + k == 3 { Cell::Code(1) } else { Cell::Star };
                assert_eq!(p.get(f, k), expected);
            }
        }
    }

    #[test]
    fn mn_5_2_params() {
        let p = build_mn_pda(5, 2).unwrap();
        assert!(validate_pda(&p, ValidationMode::Full).passed());
        assert_eq!(
            p.params().unwrap(),
            PdaParams {
                users: 5,
                subpacketization: 10,
                stars_per_column: 4,
                codes: 10,
                regularity: Some(3),
            }
        );
    }

    #[test]
    fn mn_rejects_t_at_or_above_k() {
        assert!(build_mn_pda(3, 3).is_err());
        assert!(build_mn_pda(3, 7).is_err());
        assert!(build_mn_pda(0, 0).is_err());
    }

    #[test]
    fn dedicated_three_delivery_array() {
        let q = dedicated_three_q();
        assert!(validate_pda(&q, ValidationMode::DeliveryOnly).passed());
        assert_eq!(regularity(&q), Some(2));
    }

    #[test]
    fn same_row_pair_is_reported() {
        let q: PdaArray = "1 1".parse().unwrap();
        let report = validate_pda(&q, ValidationMode::DeliveryOnly);
        assert_eq!(
            report.violations,
            vec![Violation::SameRow {
                code: 1,
                a: (0, 0),
                b: (0, 1)
            }]
        );
    }

    #[test]
    fn reports_every_violation() {
        // code 2 missing; both equal-code pairs cross non-star cells
        let q: PdaArray = "1 3\n3 1\n* *".parse().unwrap();
        let report = validate_pda(&q, ValidationMode::Full);
        assert!(report.violations.contains(&Violation::MissingCode(2)));
        let crossings = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::Crossing { .. }))
            .count();
        assert_eq!(crossings, 4);
        let zero: PdaArray = "0 *".parse().unwrap();
        assert!(validate_pda(&zero, ValidationMode::DeliveryOnly)
            .violations
            .contains(&Violation::ZeroCode { row: 0, col: 0 }));
    }

    #[test]
    fn star_only_array_has_no_regularity() {
        let p: PdaArray = "*".parse().unwrap();
        assert_eq!(regularity(&p), None);
        assert!(validate_pda(&p, ValidationMode::Full).passed());
    }

    #[test]
    fn full_mode_flags_uneven_columns() {
        let q: PdaArray = "* 1\n* *".parse().unwrap();
        assert_eq!(
            validate_pda(&q, ValidationMode::Full).violations,
            vec![Violation::StarCount {
                col: 1,
                expected: 2,
                found: 1
            }]
        );
        assert!(validate_pda(&q, ValidationMode::DeliveryOnly).passed());
        assert!(q.params().is_none());
    }

    #[test]
    fn text_form_rejects_bad_tokens() {
        assert!(matches!(
            "* x".parse::<PdaArray>(),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!("* 1\n*".parse::<PdaArray>().is_err());
        assert!("".parse::<PdaArray>().is_err());
    }
}
