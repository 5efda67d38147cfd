//! LT encoding, the erasure channel and the peeling decoder.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::DegreeDistribution;
use crate::error::{Error, Result};

/// `k` equally sized source payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceBlock {
    symbol_size: usize,
    symbols: Vec<Vec<u8>>,
}

impl SourceBlock {
    pub fn new(symbols: Vec<Vec<u8>>) -> Result<Self> {
        let symbol_size = symbols
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::input("source block is empty"))?;
        if symbol_size == 0 {
            return Err(Error::input("symbol size must be positive"));
        }
        if let Some(i) = symbols.iter().position(|s| s.len() != symbol_size) {
            return Err(Error::input(format!(
                "symbol {i} has {} bytes, expected {symbol_size}",
                symbols[i].len()
            )));
        }
        Ok(SourceBlock {
            symbol_size,
            symbols,
        })
    }

    /// Uniformly random payloads.
    pub fn random<R: Rng + ?Sized>(k: usize, symbol_size: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || symbol_size == 0 {
            return Err(Error::param("k and symbol_size must be positive"));
        }
        let symbols = (0..k)
            .map(|_| {
                let mut s = vec![0u8; symbol_size];
                rng.fill(&mut s[..]);
                s
            })
            .collect();
        Self::new(symbols)
    }

    pub fn k(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol_size(&self) -> usize {
        self.symbol_size
    }

    pub fn symbols(&self) -> &[Vec<u8>] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &[u8] {
        &self.symbols[i]
    }

    fn xor_of(&self, indices: &[usize]) -> Vec<u8> {
        let mut out = vec![0u8; self.symbol_size];
        for &i in indices {
            xor_into(&mut out, &self.symbols[i]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Regular,
    /// XOR of every source symbol.
    Checksum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSymbol {
    /// Sorted, distinct source indices.
    pub neighbors: Vec<usize>,
    pub payload: Vec<u8>,
    pub kind: SymbolKind,
}

impl EncodedSymbol {
    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    /// Moves every neighbor index up by `offset`.
    pub fn shifted(mut self, offset: usize) -> Self {
        for n in &mut self.neighbors {
            *n += offset;
        }
        self
    }

    /// XOR of two symbols over disjoint index sets.
    pub fn combine(&self, other: &EncodedSymbol) -> EncodedSymbol {
        let mut neighbors = Vec::with_capacity(self.degree() + other.degree());
        neighbors.extend_from_slice(&self.neighbors);
        neighbors.extend_from_slice(&other.neighbors);
        neighbors.sort_unstable();
        let mut payload = self.payload.clone();
        xor_into(&mut payload, &other.payload);
        EncodedSymbol {
            neighbors,
            payload,
            kind: SymbolKind::Regular,
        }
    }
}

pub(crate) fn xor_into(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Rateless LT encoder over one source block.
#[derive(Debug, Clone, Copy)]
pub struct LtEncoder<'a> {
    block: &'a SourceBlock,
    dist: &'a DegreeDistribution,
}

impl<'a> LtEncoder<'a> {
    pub fn new(block: &'a SourceBlock, dist: &'a DegreeDistribution) -> Self {
        LtEncoder { block, dist }
    }

    /// Draws a degree, picks that many distinct neighbors uniformly at random
    /// and XORs their payloads. Degrees above `k` are capped at `k`.
    pub fn next_symbol<R: Rng + ?Sized>(&self, rng: &mut R) -> EncodedSymbol {
        let k = self.block.k();
        let degree = self.dist.sample(rng).min(k);
        let mut neighbors = index::sample(rng, k, degree).into_vec();
        neighbors.sort_unstable();
        let payload = self.block.xor_of(&neighbors);
        EncodedSymbol {
            neighbors,
            payload,
            kind: SymbolKind::Regular,
        }
    }
}

/// `n` independent LT symbols.
pub fn encode<R: Rng + ?Sized>(
    block: &SourceBlock,
    d: &DegreeDistribution,
    n: usize,
    rng: &mut R,
) -> Vec<EncodedSymbol> {
    let enc = LtEncoder::new(block, d);
    (0..n).map(|_| enc.next_symbol(rng)).collect()
}

/// The degree-`k` symbol covering every source index.
pub fn checksum_symbol(block: &SourceBlock) -> EncodedSymbol {
    let neighbors: Vec<usize> = (0..block.k()).collect();
    EncodedSymbol {
        payload: block.xor_of(&neighbors),
        neighbors,
        kind: SymbolKind::Checksum,
    }
}

/// Binary erasure channel: drops each symbol independently with probability
/// `epsilon`.
pub fn erase<R: Rng + ?Sized>(
    symbols: Vec<EncodedSymbol>,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<EncodedSymbol>> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param(format!(
            "erasure probability must lie in [0, 1), got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(symbols);
    }
    Ok(symbols
        .into_iter()
        .filter(|_| rng.gen::<f64>() >= epsilon)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub recovered: Vec<bool>,
    /// Recovered payloads; `None` where the source index is unrecovered.
    pub payloads: Vec<Option<Vec<u8>>>,
    /// Number of unrecovered source symbols.
    pub bit_errors: usize,
    pub frame_ok: bool,
    pub peel_rounds: usize,
}

impl DecodeResult {
    pub fn recovered_count(&self) -> usize {
        self.recovered.len() - self.bit_errors
    }

    /// Unrecovered fraction of the source block.
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.recovered.len() as f64
    }

    /// Unrecovered count within `range`.
    pub fn errors_in(&self, range: std::ops::Range<usize>) -> usize {
        self.recovered[range].iter().filter(|r| !**r).count()
    }
}

/// One decoding round: every symbol in the ripple at the start of the round
/// is released.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelRound {
    pub round: usize,
    pub ripple_size: usize,
    pub recovered: usize,
}

/// Ripple-driven peeling decoder.
pub fn peel_decode(received: &[EncodedSymbol], k: usize) -> Result<DecodeResult> {
    peel(received, k, None)
}

/// As [`peel_decode`], also recording ripple size and progress per round.
pub fn peel_decode_traced(
    received: &[EncodedSymbol],
    k: usize,
) -> Result<(DecodeResult, Vec<PeelRound>)> {
    let mut trace = Vec::new();
    let res = peel(received, k, Some(&mut trace))?;
    Ok((res, trace))
}

fn peel(
    received: &[EncodedSymbol],
    k: usize,
    mut trace: Option<&mut Vec<PeelRound>>,
) -> Result<DecodeResult> {
    let m = received.len();
    let size = received.first().map_or(0, |s| s.payload.len());

    // source index -> symbols covering it, as a CSR table
    let mut offsets = vec![0usize; k + 1];
    for sym in received {
        if sym.neighbors.is_empty() {
            return Err(Error::input("encoded symbol with no neighbors"));
        }
        if sym.payload.len() != size {
            return Err(Error::input("encoded symbols have different payload sizes"));
        }
        for &i in &sym.neighbors {
            if i >= k {
                return Err(Error::input(format!(
                    "neighbor index {i} out of range for k = {k}"
                )));
            }
            offsets[i + 1] += 1;
        }
    }
    for i in 0..k {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut edges = vec![0usize; offsets[k]];
    for (s, sym) in received.iter().enumerate() {
        for &i in &sym.neighbors {
            edges[fill[i]] = s;
            fill[i] += 1;
        }
    }

    let mut degree: Vec<usize> = received.iter().map(EncodedSymbol::degree).collect();
    // XOR of the unresolved neighbor indices; names the last one at degree 1
    let mut pending_idx: Vec<usize> = received
        .iter()
        .map(|s| s.neighbors.iter().fold(0, |a, &i| a ^ i))
        .collect();
    let mut value: Vec<Vec<u8>> = received.iter().map(|s| s.payload.clone()).collect();
    let mut released = vec![false; m];

    let mut payloads: Vec<Option<Vec<u8>>> = vec![None; k];
    let mut recovered_count = 0usize;
    let mut ripple: VecDeque<usize> = (0..m).filter(|&s| degree[s] == 1).collect();
    let mut rounds = 0usize;

    while !ripple.is_empty() {
        rounds += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(PeelRound {
                round: rounds,
                ripple_size: ripple.len(),
                recovered: recovered_count,
            });
        }
        for _ in 0..ripple.len() {
            let s = ripple.pop_front().expect("ripple length checked");
            if released[s] || degree[s] != 1 {
                continue;
            }
            released[s] = true;
            let idx = pending_idx[s];
            let v = std::mem::take(&mut value[s]);
            for &other in &edges[offsets[idx]..offsets[idx + 1]] {
                if other == s || released[other] {
                    continue;
                }
                xor_into(&mut value[other], &v);
                degree[other] -= 1;
                pending_idx[other] ^= idx;
                match degree[other] {
                    1 => ripple.push_back(other),
                    0 => {
                        released[other] = true;
                        if value[other].iter().any(|&b| b != 0) {
                            return Err(Error::DecodeInconsistency { index: idx });
                        }
                    }
                    _ => {}
                }
            }
            payloads[idx] = Some(v);
            recovered_count += 1;
        }
    }
    if let Some(t) = trace {
        t.push(PeelRound {
            round: rounds + 1,
            ripple_size: 0,
            recovered: recovered_count,
        });
    }

    let recovered: Vec<bool> = payloads.iter().map(Option::is_some).collect();
    let bit_errors = k - recovered_count;
    Ok(DecodeResult {
        recovered,
        payloads,
        bit_errors,
        frame_ok: bit_errors == 0,
        peel_rounds: rounds,
    })
}

pub mod oracle {
    //! Reference decoders used to cross-check [`peel_decode`](super::peel_decode).

    use super::{xor_into, EncodedSymbol};

    /// Repeatedly scans every received symbol and resolves any whose
    /// unrecovered neighbors number exactly one, until a full pass changes
    /// nothing. Quadratic, but obviously correct.
    pub fn rescan_peel(received: &[EncodedSymbol], k: usize) -> Vec<Option<Vec<u8>>> {
        let mut known: Vec<Option<Vec<u8>>> = vec![None; k];
        loop {
            let mut progress = false;
            for sym in received {
                let unknown: Vec<usize> = sym
                    .neighbors
                    .iter()
                    .copied()
                    .filter(|&i| known[i].is_none())
                    .collect();
                if unknown.len() != 1 {
                    continue;
                }
                let mut v = sym.payload.clone();
                for &i in &sym.neighbors {
                    if let Some(p) = &known[i] {
                        xor_into(&mut v, p);
                    }
                }
                known[unknown[0]] = Some(v);
                progress = true;
            }
            if !progress {
                return known;
            }
        }
    }

    /// Completes a block with exactly one missing symbol from the all-source
    /// checksum: `missing = s_m ⊕ (XOR of the recovered symbols)`.
    pub fn complete_with_checksum(
        known: &[Option<Vec<u8>>],
        checksum: &[u8],
    ) -> Option<(usize, Vec<u8>)> {
        let mut missing = known.iter().enumerate().filter(|(_, p)| p.is_none());
        let (idx, _) = missing.next()?;
        if missing.next().is_some() {
            return None;
        }
        let mut v = checksum.to_vec();
        for p in known.iter().flatten() {
            xor_into(&mut v, p);
        }
        Some((idx, v))
    }
}
