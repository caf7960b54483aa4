//! Randomized local Pauli measurements.
//!
//! Bases are drawn uniformly per qubit from {X, Y, Z} with replacement.
//! Shots for basis `b` (its position in the pool) come from ChaCha8 stream
//! `b` of the dataset seed, by inverse-CDF sampling over the full outcome
//! distribution, so each basis is reproducible on its own.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::qcore::{Axis, BasisPattern, Bitstring, QuantumState};
use crate::{rng, Error, Result};

pub const DATASET_MAGIC: &str = "DEPTHCERT-DATASET v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub basis: usize,
    pub outcome: Bitstring,
}

/// Shot records plus the basis pool they reference.
///
/// Records store an index into `bases`; identical patterns may appear more
/// than once in the pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementDataset {
    n_qubits: usize,
    seed: u64,
    bases: Vec<BasisPattern>,
    records: Vec<ShotRecord>,
}

impl MeasurementDataset {
    pub fn from_records(
        n_qubits: usize,
        seed: u64,
        records: impl IntoIterator<Item = (BasisPattern, Bitstring)>,
    ) -> Result<Self> {
        let mut bases: Vec<BasisPattern> = Vec::new();
        let mut index: BTreeMap<BasisPattern, usize> = BTreeMap::new();
        let mut out = Vec::new();
        for (basis, outcome) in records {
            if basis.len() != n_qubits || outcome.len() != n_qubits {
                return Err(Error::invalid(format!(
                    "record {basis} {outcome} does not have {n_qubits} qubits"
                )));
            }
            let b = *index.entry(basis.clone()).or_insert_with(|| {
                bases.push(basis);
                bases.len() - 1
            });
            out.push(ShotRecord { basis: b, outcome });
        }
        if out.is_empty() {
            return Err(Error::invalid("dataset has no records"));
        }
        Ok(MeasurementDataset {
            n_qubits,
            seed,
            bases,
            records: out,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_shots(&self) -> usize {
        self.records.len()
    }

    pub fn bases(&self) -> &[BasisPattern] {
        &self.bases
    }

    pub fn records(&self) -> &[ShotRecord] {
        &self.records
    }

    pub fn basis_of(&self, record: &ShotRecord) -> &BasisPattern {
        &self.bases[record.basis]
    }

    /// Serialize in the plain-text dataset format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{DATASET_MAGIC} n={} seed={}", self.n_qubits, self.seed)?;
        let mut line = String::with_capacity(2 * self.n_qubits + 2);
        let labels: Vec<String> = self.bases.iter().map(|b| b.to_string()).collect();
        for r in &self.records {
            line.clear();
            let _ = writeln!(line, "{} {}", labels[r.basis], r.outcome);
            w.write_all(line.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dataset text is ASCII")
    }

    /// Parse the plain-text dataset format; errors carry 1-based line numbers.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(l) => l?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty file".into(),
                })
            }
        };
        let (n, seed) = parse_header(&header)?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line?;
            let (basis, bits) = line.split_once(' ').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected '<basis> <bits>'".into(),
            })?;
            if bits.contains(' ') {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "too many fields".into(),
                });
            }
            let basis: BasisPattern = basis.parse().map_err(|e: Error| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            let outcome: Bitstring = bits.parse().map_err(|e: Error| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            if basis.len() != n || outcome.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("record length differs from n={n}"),
                });
            }
            records.push((basis, outcome));
        }
        if records.is_empty() {
            return Err(Error::Parse {
                line: 2,
                msg: "no records".into(),
            });
        }
        MeasurementDataset::from_records(n, seed, records)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        MeasurementDataset::read_from(text.as_bytes())
    }
}

fn parse_header(header: &str) -> Result<(usize, u64)> {
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let rest = header
        .strip_prefix(DATASET_MAGIC)
        .ok_or_else(|| bad("missing 'DEPTHCERT-DATASET v1' header"))?;
    let mut fields = rest.split(' ').filter(|f| !f.is_empty());
    let n = fields
        .next()
        .and_then(|f| f.strip_prefix("n="))
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| bad("expected n=<qubits>"))?;
    let seed = fields
        .next()
        .and_then(|f| f.strip_prefix("seed="))
        .and_then(|v| v.parse::<u64>().ok())
        .ok_or_else(|| bad("expected seed=<u64>"))?;
    if fields.next().is_some() {
        return Err(bad("trailing header fields"));
    }
    if n == 0 || n > crate::MAX_QUBITS {
        return Err(bad("qubit count out of range"));
    }
    Ok((n, seed))
}

/// `n_bases` random patterns, each axis i.i.d. uniform over {X, Y, Z}.
pub fn sample_bases(n: usize, n_bases: usize, seed: u64) -> Result<Vec<BasisPattern>> {
    if n_bases == 0 || n == 0 {
        return Err(Error::invalid("need at least one basis and one qubit"));
    }
    let mut rng = rng::seeded(seed);
    Ok((0..n_bases)
        .map(|_| {
            BasisPattern::new(
                (0..n)
                    .map(|_| Axis::from_index(rng.random_range(0..3)))
                    .collect(),
            )
        })
        .collect())
}

/// Draw `shots_per_basis` outcomes for every basis in order.
pub fn sample_dataset(
    state: &QuantumState,
    bases: &[BasisPattern],
    shots_per_basis: usize,
    seed: u64,
) -> Result<MeasurementDataset> {
    if bases.is_empty() || shots_per_basis == 0 {
        return Err(Error::invalid("need at least one basis and one shot"));
    }
    let n = state.n_qubits();
    let mut records = Vec::with_capacity(bases.len() * shots_per_basis);
    for (b, basis) in bases.iter().enumerate() {
        if basis.len() != n {
            return Err(Error::invalid(format!(
                "basis {basis} does not match {n} qubits"
            )));
        }
        let probs = state.born_probabilities(basis)?;
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let last_nonzero = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        let mut rng = rng::seeded_stream(seed, b as u64);
        for _ in 0..shots_per_basis {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cdf.partition_point(|c| *c <= u).min(last_nonzero);
            records.push((basis.clone(), Bitstring::from_index(n, idx)?));
        }
    }
    MeasurementDataset::from_records(n, seed, records)
}

/// Outcome counts of one basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisCounts {
    pub shots: usize,
    /// outcome index → count, only observed outcomes
    pub counts: BTreeMap<usize, usize>,
}

impl BasisCounts {
    pub fn frequency(&self, outcome: usize) -> f64 {
        self.counts.get(&outcome).copied().unwrap_or(0) as f64 / self.shots as f64
    }
}

/// Per-basis empirical frequencies f_b(s) with shot counts N_b.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTable {
    n_qubits: usize,
    n_shots: usize,
    bases: BTreeMap<BasisPattern, BasisCounts>,
}

impl FrequencyTable {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_shots(&self) -> usize {
        self.n_shots
    }

    pub fn bases(&self) -> impl Iterator<Item = (&BasisPattern, &BasisCounts)> {
        self.bases.iter()
    }

    pub fn n_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn get(&self, basis: &BasisPattern) -> Option<&BasisCounts> {
        self.bases.get(basis)
    }

    /// −Σ_b (N_b/N) Σ_s f_b(s) log f_b(s): the smallest achievable NLL.
    pub fn conditional_entropy(&self) -> f64 {
        let total = self.n_shots as f64;
        let mut h = 0.0;
        for counts in self.bases.values() {
            let nb = counts.shots as f64;
            for &c in counts.counts.values() {
                let f = c as f64 / nb;
                h -= (c as f64 / total) * f.ln();
            }
        }
        h
    }
}

/// Group records by basis and count outcomes.
pub fn empirical_frequencies(dataset: &MeasurementDataset) -> Result<FrequencyTable> {
    if dataset.records.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let mut per_index: Vec<BasisCounts> = dataset
        .bases
        .iter()
        .map(|_| BasisCounts {
            shots: 0,
            counts: BTreeMap::new(),
        })
        .collect();
    for r in &dataset.records {
        let entry = &mut per_index[r.basis];
        entry.shots += 1;
        *entry.counts.entry(r.outcome.index()).or_insert(0) += 1;
    }
    let bases = dataset
        .bases
        .iter()
        .cloned()
        .zip(per_index)
        .filter(|(_, c)| c.shots > 0)
        .collect();
    Ok(FrequencyTable {
        n_qubits: dataset.n_qubits,
        n_shots: dataset.records.len(),
        bases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{build_bell_pairs, build_ghz, StateVector};

    fn rec(b: &str, s: &str) -> (BasisPattern, Bitstring) {
        (b.parse().unwrap(), s.parse().unwrap())
    }

    #[test]
    fn basis_sampling_is_reproducible() {
        let a = sample_bases(6, 200, 7).unwrap();
        let b = sample_bases(6, 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|p| p.len() == 6));
        assert_ne!(a, sample_bases(6, 200, 8).unwrap());
        assert_eq!(sample_bases(6, 1, 3).unwrap()[0].len(), 6);
        assert!(sample_bases(6, 0, 3).is_err());
    }

    #[test]
    fn axis_fractions_are_uniform() {
        let pool = sample_bases(1, 30_000, 11).unwrap();
        let mut counts = [0usize; 3];
        for p in &pool {
            counts[p.axes()[0].index()] += 1;
        }
        for c in counts {
            let frac = c as f64 / 30_000.0;
            assert!((frac - 1.0 / 3.0).abs() < 0.02, "{frac}");
        }
    }

    #[test]
    fn ghz6_shot_budget() {
        let state = QuantumState::Pure(build_ghz(6, None).unwrap());
        let bases = sample_bases(6, 200, 1).unwrap();
        let ds = sample_dataset(&state, &bases, 2000, 1).unwrap();
        assert_eq!(ds.n_shots(), 400_000);
    }

    #[test]
    fn deterministic_state_gives_constant_outcomes() {
        let state = QuantumState::Pure(StateVector::basis_state(4, 0).unwrap());
        let bases = vec![BasisPattern::uniform(4, Axis::Z); 3];
        let ds = sample_dataset(&state, &bases, 50, 5).unwrap();
        assert!(ds.records().iter().all(|r| r.outcome.index() == 0));
        assert!(sample_dataset(&state, &[BasisPattern::uniform(3, Axis::Z)], 5, 1).is_err());
    }

    #[test]
    fn bell_frequencies_converge() {
        let state = QuantumState::Pure(build_bell_pairs(1).unwrap());
        let zz: BasisPattern = "ZZ".parse().unwrap();
        let ds = sample_dataset(&state, std::slice::from_ref(&zz), 100_000, 3).unwrap();
        let table = empirical_frequencies(&ds).unwrap();
        let f = table.get(&zz).unwrap();
        assert!((f.frequency(0) - 0.5).abs() < 0.01);
        let p = state.born_probabilities(&zz).unwrap();
        let worst = (0..4)
            .map(|s| (f.frequency(s) - p[s]).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.01);
    }

    #[test]
    fn counting_and_grouping() {
        let ds = MeasurementDataset::from_records(
            2,
            0,
            vec![rec("ZZ", "00"), rec("ZZ", "00"), rec("ZZ", "11")],
        )
        .unwrap();
        let t = empirical_frequencies(&ds).unwrap();
        let c = t.get(&"ZZ".parse().unwrap()).unwrap();
        assert!((c.frequency(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.frequency(3) - 1.0 / 3.0).abs() < 1e-15);

        let ds = MeasurementDataset::from_records(
            2,
            0,
            vec![rec("ZZ", "00"), rec("XX", "01"), rec("ZZ", "10")],
        )
        .unwrap();
        let t = empirical_frequencies(&ds).unwrap();
        assert_eq!(t.n_bases(), 2);
        assert_eq!(t.get(&"ZZ".parse().unwrap()).unwrap().shots, 2);
        assert_eq!(t.get(&"XX".parse().unwrap()).unwrap().shots, 1);
        for (_, c) in t.bases() {
            let s: f64 = c.counts.keys().map(|&o| c.frequency(o)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn file_round_trip_is_exact() {
        let state = QuantumState::Pure(build_ghz(3, Some(&"XYZ".parse().unwrap())).unwrap());
        let bases = sample_bases(3, 10, 4).unwrap();
        let ds = sample_dataset(&state, &bases, 30, 4).unwrap();
        let text = ds.to_text();
        assert!(text.starts_with("DEPTHCERT-DATASET v1 n=3 seed=4\n"));
        let back = MeasurementDataset::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(
            empirical_frequencies(&back).unwrap(),
            empirical_frequencies(&ds).unwrap()
        );
    }

    #[test]
    fn parser_reports_line_numbers() {
        let cases = [
            ("DEPTHCERT-DATASET v1 n=2 seed=1\nZZ 00\nZQ 01\n", 3),
            ("DEPTHCERT-DATASET v1 n=2 seed=1\nZZ 00\nZZ 0\n", 3),
            ("DEPTHCERT-DATASET v1 n=2 seed=1\nZZ00\n", 2),
            ("DEPTHCERT-DATASET v1 n=2 seed=1\nZZ 00 11\n", 2),
            ("DEPTHCERT-DATASET v2 n=2 seed=1\nZZ 00\n", 1),
            ("DEPTHCERT-DATASET v1 n=2\nZZ 00\n", 1),
        ];
        for (text, line) in cases {
            match MeasurementDataset::from_text(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empirical_entropy_of_fair_coin() {
        let ds =
            MeasurementDataset::from_records(1, 0, vec![rec("Z", "0"), rec("Z", "1")]).unwrap();
        let t = empirical_frequencies(&ds).unwrap();
        assert!((t.conditional_entropy() - 2f64.ln()).abs() < 1e-15);
    }
}
