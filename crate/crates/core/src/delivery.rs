//! XOR multicast delivery over synthetic file contents, with per-user
//! decoding to check that a user-delivery array actually works.

use num_rational::Ratio;
use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::macc::{seeded_rng, RetrieveArray};
use crate::pda::{validate_pda, Cell, PdaArray, ValidationMode};

pub const DEFAULT_PACKET_BITS: usize = 64;

/// Requested file per user, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandVector {
    files: usize,
    demands: Vec<usize>,
}

impl DemandVector {
    pub fn new(files: usize, demands: Vec<usize>) -> Result<Self> {
        if let Some((k, &d)) = demands.iter().enumerate().find(|(_, &d)| d >= files) {
            return Err(Error::InvalidParameter(format!(
                "user {} requests file {} of {files}",
                k + 1,
                d + 1
            )));
        }
        Ok(Self { files, demands })
    }

    pub fn from_one_based(files: usize, demands: &[usize]) -> Result<Self> {
        let zero = demands
            .iter()
            .map(|&d| {
                d.checked_sub(1)
                    .ok_or_else(|| Error::InvalidParameter("file index 0".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(files, zero)
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn file(&self, user: usize) -> usize {
        self.demands[user]
    }

    pub fn files(&self) -> usize {
        self.files
    }
}

/// `N` files of `F` packets, each packet `B` bits stored in 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLibrary {
    files: usize,
    packets: usize,
    bits: usize,
    words: usize,
    data: Vec<u64>,
}

impl FileLibrary {
    pub fn zeroed(files: usize, packets: usize, bits: usize) -> Result<Self> {
        if files == 0 || packets == 0 || bits == 0 {
            return Err(Error::InvalidParameter(format!(
                "library dimensions must be positive (N={files}, F={packets}, B={bits})"
            )));
        }
        let words = bits.div_ceil(64);
        Ok(Self {
            files,
            packets,
            bits,
            words,
            data: vec![0; files * packets * words],
        })
    }

    /// Fill with bits from the seeded generator.
    pub fn random(files: usize, packets: usize, bits: usize, seed: u64) -> Result<Self> {
        let mut lib = Self::zeroed(files, packets, bits)?;
        let mut rng = seeded_rng(seed);
        let tail = bits % 64;
        for (i, w) in lib.data.iter_mut().enumerate() {
            *w = rng.next_u64();
            if tail != 0 && i % lib.words == lib.words - 1 {
                *w &= (1u64 << tail) - 1;
            }
        }
        Ok(lib)
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn packet_bits(&self) -> usize {
        self.bits
    }

    pub fn packet(&self, file: usize, f: usize) -> &[u64] {
        let start = (file * self.packets + f) * self.words;
        &self.data[start..start + self.words]
    }

    /// Bitwise XOR of two libraries of equal shape.
    pub fn xor(&self, other: &FileLibrary) -> Result<FileLibrary> {
        if (self.files, self.packets, self.bits) != (other.files, other.packets, other.bits) {
            return Err(Error::DimensionMismatch("libraries differ in shape".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        Ok(out)
    }
}

fn xor_into(acc: &mut [u64], src: &[u64]) {
    for (a, b) in acc.iter_mut().zip(src) {
        *a ^= b;
    }
}

/// One coded multicast: XOR of the requested packets of every cell sharing a
/// code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub payload: Vec<u64>,
    /// `(f, k)` cells, 0-based, in row-major order.
    pub cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionSchedule {
    pub blocks: Vec<Transmission>,
}

impl TransmissionSchedule {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Flip one bit of block `s` (1-based).
    pub fn flip_bit(&mut self, s: usize, bit: usize) {
        let payload = &mut self.blocks[s - 1].payload;
        payload[bit / 64] ^= 1 << (bit % 64);
    }
}

pub fn make_schedule(
    q: &PdaArray,
    demand: &DemandVector,
    lib: &FileLibrary,
) -> Result<TransmissionSchedule> {
    if q.cols() != demand.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} users in the array, {} demands",
            q.cols(),
            demand.len()
        )));
    }
    if q.rows() != lib.packets() {
        return Err(Error::DimensionMismatch(format!(
            "{} packets in the array, {} per library file",
            q.rows(),
            lib.packets()
        )));
    }
    if demand.files() > lib.files() {
        return Err(Error::DimensionMismatch(format!(
            "demands range over {} files, library holds {}",
            demand.files(),
            lib.files()
        )));
    }
    let report = validate_pda(q, ValidationMode::DeliveryOnly);
    if !report.passed() {
        return Err(Error::InvalidParameter(format!(
            "delivery array has {} violations",
            report.violations.len()
        )));
    }

    let s_count = q.code_count();
    let mut blocks = vec![
        Transmission {
            payload: vec![0; lib.words],
            cells: Vec::new(),
        };
        s_count
    ];
    for f in 0..q.rows() {
        for k in 0..q.cols() {
            if let Cell::Code(s) = q.get(f, k) {
                let block = &mut blocks[s as usize - 1];
                xor_into(&mut block.payload, lib.packet(demand.file(k), f));
                block.cells.push((f, k));
            }
        }
    }
    Ok(TransmissionSchedule { blocks })
}

/// Outcome of decoding at every user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeReport {
    /// Reconstructed packets per user, `F * words` each.
    pub recovered: Vec<Vec<u64>>,
    /// First `(user, packet)` (0-based) whose reconstruction failed or
    /// mismatched, scanning users then packets in ascending order.
    pub failure: Option<(usize, usize)>,
}

impl DecodeReport {
    pub fn success(&self) -> bool {
        self.failure.is_none()
    }
}

/// Decode every user's requested file. User `k` reads starred packets from the
/// caches it reaches (the star pattern of `u`), and recovers packet `f` with
/// `Q(f, k) = s` by stripping the other terms of block `s`, each of which must
/// itself be starred for `k`.
pub fn decode_all(
    schedule: &TransmissionSchedule,
    u: &RetrieveArray,
    q: &PdaArray,
    demand: &DemandVector,
    lib: &FileLibrary,
) -> Result<DecodeReport> {
    if (u.rows(), u.cols()) != (q.rows(), q.cols()) {
        return Err(Error::DimensionMismatch("U and Q differ in shape".into()));
    }
    for f in 0..u.rows() {
        for k in 0..u.cols() {
            if u.is_star(f, k) != q.get(f, k).is_star() {
                return Err(Error::DimensionMismatch(format!(
                    "U and Q disagree on the star at ({}, {})",
                    f + 1,
                    k + 1
                )));
            }
        }
    }
    if demand.len() != u.cols() || lib.packets() != u.rows() {
        return Err(Error::DimensionMismatch(
            "demand or library does not match the array".into(),
        ));
    }

    let words = lib.words;
    let per_user: Vec<(Vec<u64>, Option<usize>)> = (0..u.cols())
        .into_par_iter()
        .map(|k| {
            let want = demand.file(k);
            let mut out = vec![0u64; u.rows() * words];
            let mut failed = None;
            for f in 0..u.rows() {
                let slot = &mut out[f * words..(f + 1) * words];
                let ok = match q.get(f, k) {
                    Cell::Star => {
                        slot.copy_from_slice(lib.packet(want, f));
                        true
                    }
                    Cell::Code(s) => match schedule.blocks.get(s as usize - 1) {
                        None => false,
                        Some(block) => {
                            slot.copy_from_slice(&block.payload);
                            block.cells.iter().filter(|&&c| c != (f, k)).all(|&(f2, k2)| {
                                if !u.is_star(f2, k) {
                                    return false;
                                }
                                xor_into(slot, lib.packet(demand.file(k2), f2));
                                true
                            })
                        }
                    },
                };
                if failed.is_none() && (!ok || slot != lib.packet(want, f)) {
                    failed = Some(f);
                }
            }
            (out, failed)
        })
        .collect();

    let failure = per_user
        .iter()
        .enumerate()
        .find_map(|(k, (_, f))| f.map(|f| (k, f)));
    Ok(DecodeReport {
        recovered: per_user.into_iter().map(|(p, _)| p).collect(),
        failure,
    })
}

/// Normalized delivery load `S / F`.
pub fn load(transmissions: usize, subpacketization: usize) -> Ratio<u64> {
    assert!(subpacketization > 0, "subpacketization must be positive");
    Ratio::new(transmissions as u64, subpacketization as u64)
}
