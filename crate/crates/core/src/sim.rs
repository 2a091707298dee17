//! Dense statevector engine.
//!
//! States live in the computational basis with little-endian qubit ordering:
//! amplitude index bit `j` (bit 0 = least significant) addresses qubit `j`.
//! Kets in doc comments are written `|q0 q1 ... q{N-1}⟩`, so `|10⟩` has
//! qubit 0 set and amplitude index 1.
//!
//! The purity `E_k = tr(ρ_k²)` of the single-qubit marginal is offered via
//! three routes that must agree: the reduced-matrix trace (default), the
//! Pauli form `½(1 + Σ_α ⟨σ_k^α⟩²)`, and the Bell-projector form
//! `1 − 2⟨ψ|⟨ψ|Π_k|ψ⟩|ψ⟩` evaluated on an explicitly materialized doubled
//! register. The latter two mirror how the quantities are measured on
//! hardware and serve as cross-validation oracles.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Pauli axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// 2×2 matrix of the Pauli operator.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => [[o, l], [l, o]],
            Axis::Y => [[o, -i], [i, o]],
            Axis::Z => [[l, o], [o, -l]],
        }
    }
}

/// Normalized pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Selects which measurement scheme computes single-qubit purities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PurityRoute {
    /// Reduced-matrix trace, the cheapest route.
    #[default]
    Trace,
    /// Pauli form `½(1 + Σ_α ⟨σ^α⟩²)`.
    Pauli,
    /// Bell-basis form on a doubled register (`n ≤ 12`).
    Bell,
}

/// 2×2 reduced density matrix of a single qubit.
#[derive(Debug, Clone, Copy)]
pub struct DensityMatrix1Q {
    pub entries: [[Complex64; 2]; 2],
}

impl DensityMatrix1Q {
    pub fn trace(&self) -> f64 {
        (self.entries[0][0] + self.entries[1][1]).re
    }

    /// `tr(ρ²)` for a Hermitian 2×2 with real diagonal.
    pub fn purity(&self) -> f64 {
        let p0 = self.entries[0][0].re;
        let p1 = self.entries[1][1].re;
        p0 * p0 + p1 * p1 + 2.0 * self.entries[0][1].norm_sqr()
    }

    /// Eigenvalues in descending order. Both lie in `[0, 1]` for a valid
    /// single-qubit marginal.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let p0 = self.entries[0][0].re;
        let p1 = self.entries[1][1].re;
        let mean = 0.5 * (p0 + p1);
        let half_gap = (0.25 * (p0 - p1) * (p0 - p1) + self.entries[0][1].norm_sqr()).sqrt();
        [mean + half_gap, mean - half_gap]
    }

    /// Maximal deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d01 = (self.entries[0][1] - self.entries[1][0].conj()).norm();
        let d_diag = self.entries[0][0].im.abs().max(self.entries[1][1].im.abs());
        d01.max(d_diag)
    }
}

/// Maximum register size for the materialized doubled-register Bell route.
pub const BELL_REGISTER_LIMIT: usize = 12;

const UNITARY_TOL: f64 = 1e-8;

fn check_qubit(index: usize, n_qubits: usize) -> Result<()> {
    if index >= n_qubits {
        return Err(Error::QubitOutOfRange { index, n_qubits });
    }
    Ok(())
}

/// Deviation of `u†u` from the identity, max over entries.
pub fn unitarity_deviation_2(u: &[[Complex64; 2]; 2]) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                s += u[k][r].conj() * u[k][c];
            }
            let target = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((s - target).norm());
        }
    }
    dev
}

/// Deviation of `u†u` from the identity for a 4×4 matrix.
pub fn unitarity_deviation_4(u: &[[Complex64; 4]; 4]) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                s += u[k][r].conj() * u[k][c];
            }
            let target = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((s - target).norm());
        }
    }
    dev
}

impl StateVector {
    /// `|0...0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "need at least one qubit");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(index < (1 << n_qubits));
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Build from raw amplitudes; they must be normalized within `1e-12`.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != (1 << n_qubits) {
            return Err(Error::DimensionMismatch {
                context: format!("expected {} amplitudes, got {}", 1 << n_qubits, amps.len()),
            });
        }
        let state = Self { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "state not normalized: Σ|a|² = {norm}"
            )));
        }
        Ok(state)
    }

    /// GHZ state `(|0...0⟩ + |1...1⟩)/√2`.
    pub fn ghz(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = h;
        amps[(1 << n_qubits) - 1] = h;
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Crate-internal: build without the normalization check. Derivative
    /// states and accumulator buffers are intentionally unnormalized.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Renormalize in place; returns the norm that was divided out.
    pub fn renormalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
        norm
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                context: format!("{} vs {} qubits", self.n_qubits, other.n_qubits),
            });
        }
        let mut s = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            s += a.conj() * b;
        }
        Ok(s)
    }

    /// Apply a single-qubit unitary to qubit `k`.
    pub fn apply_1q(&mut self, k: usize, u: &[[Complex64; 2]; 2]) -> Result<()> {
        check_qubit(k, self.n_qubits)?;
        let dev = unitarity_deviation_2(u);
        if dev > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation: dev });
        }
        self.apply_1q_raw(k, u);
        Ok(())
    }

    /// Apply an arbitrary (not necessarily unitary) 2×2 operator to qubit
    /// `k`. Used internally for marginal operators and generator insertions;
    /// the result is generally unnormalized.
    pub fn apply_1q_raw(&mut self, k: usize, u: &[[Complex64; 2]; 2]) {
        let stride = 1usize << k;
        let dim = self.amps.len();
        let mut base = 0usize;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 | stride;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[i1] = u[1][0] * a0 + u[1][1] * a1;
            }
            base += stride << 1;
        }
    }

    /// Apply a two-qubit unitary to qubits `(ka, kb)`. The 4×4 matrix acts on
    /// the subspace ordered as `index = 2·q_kb + q_ka` (first listed qubit is
    /// the least significant bit, matching the global convention).
    pub fn apply_2q(&mut self, ka: usize, kb: usize, u: &[[Complex64; 4]; 4]) -> Result<()> {
        check_qubit(ka, self.n_qubits)?;
        check_qubit(kb, self.n_qubits)?;
        if ka == kb {
            return Err(Error::InvalidArgument(format!(
                "two-qubit gate needs distinct qubits, got ({ka}, {kb})"
            )));
        }
        let dev = unitarity_deviation_4(u);
        if dev > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation: dev });
        }
        self.apply_2q_raw(ka, kb, u);
        Ok(())
    }

    /// Unchecked 4×4 application, same indexing as [`Self::apply_2q`].
    pub fn apply_2q_raw(&mut self, ka: usize, kb: usize, u: &[[Complex64; 4]; 4]) {
        let sa = 1usize << ka;
        let sb = 1usize << kb;
        let dim = self.amps.len();
        for base in 0..dim {
            if base & sa != 0 || base & sb != 0 {
                continue;
            }
            let i = [base, base | sa, base | sb, base | sa | sb];
            let a = [self.amps[i[0]], self.amps[i[1]], self.amps[i[2]], self.amps[i[3]]];
            for r in 0..4 {
                self.amps[i[r]] =
                    u[r][0] * a[0] + u[r][1] * a[1] + u[r][2] * a[2] + u[r][3] * a[3];
            }
        }
    }

    /// `⟨ψ|σ_k^axis|ψ⟩ ∈ [−1, 1]`.
    pub fn pauli_expectation(&self, k: usize, axis: Axis) -> Result<f64> {
        check_qubit(k, self.n_qubits)?;
        let stride = 1usize << k;
        let dim = self.amps.len();
        let mut acc = 0.0f64;
        match axis {
            Axis::Z => {
                for (i, a) in self.amps.iter().enumerate() {
                    let sign = if i & stride == 0 { 1.0 } else { -1.0 };
                    acc += sign * a.norm_sqr();
                }
            }
            Axis::X => {
                let mut base = 0usize;
                while base < dim {
                    for i0 in base..base + stride {
                        let z = self.amps[i0].conj() * self.amps[i0 | stride];
                        acc += 2.0 * z.re;
                    }
                    base += stride << 1;
                }
            }
            Axis::Y => {
                let mut base = 0usize;
                while base < dim {
                    for i0 in base..base + stride {
                        let z = self.amps[i0].conj() * self.amps[i0 | stride];
                        acc += 2.0 * z.im;
                    }
                    base += stride << 1;
                }
            }
        }
        Ok(acc)
    }

    /// Reduced density matrix `ρ_k = tr_{k̄}(|ψ⟩⟨ψ|)`.
    pub fn reduced_density_matrix(&self, k: usize) -> Result<DensityMatrix1Q> {
        check_qubit(k, self.n_qubits)?;
        let stride = 1usize << k;
        let dim = self.amps.len();
        let mut p0 = 0.0f64;
        let mut p1 = 0.0f64;
        let mut coh = Complex64::new(0.0, 0.0);
        let mut base = 0usize;
        while base < dim {
            for i0 in base..base + stride {
                let a0 = self.amps[i0];
                let a1 = self.amps[i0 | stride];
                p0 += a0.norm_sqr();
                p1 += a1.norm_sqr();
                coh += a0 * a1.conj();
            }
            base += stride << 1;
        }
        Ok(DensityMatrix1Q {
            entries: [
                [Complex64::new(p0, 0.0), coh],
                [coh.conj(), Complex64::new(p1, 0.0)],
            ],
        })
    }

    /// Purity `E_k = tr(ρ_k²)` via the reduced-matrix trace (default route).
    pub fn purity_single(&self, k: usize) -> Result<f64> {
        Ok(self.reduced_density_matrix(k)?.purity())
    }

    /// Purity via the Pauli form `½(1 + Σ_α ⟨σ_k^α⟩²)`.
    pub fn purity_single_pauli(&self, k: usize) -> Result<f64> {
        let mut s = 0.0;
        for axis in Axis::ALL {
            let e = self.pauli_expectation(k, axis)?;
            s += e * e;
        }
        Ok(0.5 * (1.0 + s))
    }

    /// Purity via the selected route.
    pub fn purity_single_via(&self, k: usize, route: PurityRoute) -> Result<f64> {
        match route {
            PurityRoute::Trace => self.purity_single(k),
            PurityRoute::Pauli => self.purity_single_pauli(k),
            PurityRoute::Bell => purity_bell_oracle(self, k),
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Kronecker product `self ⊗ other`, with `other`'s qubits appended as
    /// the higher-significance indices.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let n = self.n_qubits + other.n_qubits;
        let mut amps = Vec::with_capacity(1 << n);
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        StateVector { n_qubits: n, amps }
    }

    // --- serialization ---------------------------------------------------

    /// JSON form `{"n": int, "re": [..], "im": [..]}` with amplitudes in
    /// index order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n_qubits,
            "re": self.amps.iter().map(|a| a.re).collect::<Vec<_>>(),
            "im": self.amps.iter().map(|a| a.im).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let n = v["n"]
            .as_u64()
            .ok_or_else(|| Error::Serialization("missing field n".into()))? as usize;
        let re = v["re"]
            .as_array()
            .ok_or_else(|| Error::Serialization("missing field re".into()))?;
        let im = v["im"]
            .as_array()
            .ok_or_else(|| Error::Serialization("missing field im".into()))?;
        if re.len() != (1 << n) || im.len() != (1 << n) {
            return Err(Error::Serialization("amplitude count mismatch".into()));
        }
        let amps = re
            .iter()
            .zip(im.iter())
            .map(|(r, i)| Complex64::new(r.as_f64().unwrap_or(0.0), i.as_f64().unwrap_or(0.0)))
            .collect();
        Self::from_amplitudes(n, amps)
    }

    /// Binary form: magic `DQAE`, version u32, n u32, then interleaved
    /// little-endian f64 (re, im) pairs in index order.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"DQAE")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"DQAE" {
            return Err(Error::Serialization("bad magic".into()));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let version = u32::from_le_bytes(buf4);
        if version != 1 {
            return Err(Error::Serialization(format!("unsupported version {version}")));
        }
        r.read_exact(&mut buf4)?;
        let n = u32::from_le_bytes(buf4) as usize;
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf8 = [0u8; 8];
        for _ in 0..(1usize << n) {
            r.read_exact(&mut buf8)?;
            let re = f64::from_le_bytes(buf8);
            r.read_exact(&mut buf8)?;
            let im = f64::from_le_bytes(buf8);
            amps.push(Complex64::new(re, im));
        }
        Self::from_amplitudes(n, amps)
    }
}

/// `⟨a⊗b|Π_k|a⊗b⟩` where `Π_k` projects the pair `(k, n+k)` of the doubled
/// `2n`-qubit register onto the singlet `(|01⟩−|10⟩)/√2`. The doubled
/// register is materialized explicitly, which caps `n` at
/// [`BELL_REGISTER_LIMIT`].
pub fn bell_projector_expectation(a: &StateVector, b: &StateVector, k: usize) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::DimensionMismatch {
            context: format!("{} vs {} qubits", a.n_qubits, b.n_qubits),
        });
    }
    let n = a.n_qubits;
    if n > BELL_REGISTER_LIMIT {
        return Err(Error::RegisterTooLarge { n_qubits: n, limit: BELL_REGISTER_LIMIT });
    }
    check_qubit(k, n)?;
    let doubled = a.tensor(b); // copy A on qubits 0..n, copy B on n..2n
    let lo = 1usize << k;
    let hi = 1usize << (n + k);
    let mut acc = 0.0f64;
    for idx in 0..doubled.amps.len() {
        // enumerate indices with q_k = 0 and q_{n+k} = 1
        if idx & lo != 0 || idx & hi == 0 {
            continue;
        }
        let partner = idx ^ lo ^ hi;
        acc += (doubled.amps[idx] - doubled.amps[partner]).norm_sqr();
    }
    Ok(0.5 * acc)
}

/// Purity via the Bell-basis form `E_k = 1 − 2⟨ψ|⟨ψ|Π_k|ψ⟩|ψ⟩`.
pub fn purity_bell_oracle(state: &StateVector, k: usize) -> Result<f64> {
    Ok(1.0 - 2.0 * bell_projector_expectation(state, state, k)?)
}

/// Fidelity of the loss-channel reconstruction given the encoded state
/// `|φ⟩ = U|ψ⟩`: `F = ⟨φ| ⊗_k ρ_k |φ⟩` with `ρ_k` the single-qubit marginals
/// of `|φ⟩` themselves. Each `ρ_k` is applied as a local 2×2 operator, so no
/// `2^n × 2^n` matrix is ever materialized. `F ∈ [2^{−n}, 1]`, with `F = 1`
/// exactly when `|φ⟩` is a product state.
pub fn encoded_fidelity(phi: &StateVector) -> f64 {
    let mut projected = phi.clone();
    for k in 0..phi.n_qubits() {
        let rho = phi
            .reduced_density_matrix(k)
            .expect("index in range by construction");
        projected.apply_1q_raw(k, &rho.entries);
    }
    phi.inner(&projected)
        .expect("dimensions match by construction")
        .re
}

/// Single-qubit state drawn uniformly (Haar) on the Bloch sphere.
pub fn haar_random_1q(stream: &RngStream) -> StateVector {
    let mut rng = stream.rng();
    haar_random_1q_with(&mut rng)
}

/// Same as [`haar_random_1q`] but drawing from an already materialized
/// generator, so callers can draw several factors from one stream.
pub fn haar_random_1q_with<R: rand::Rng>(rng: &mut R) -> StateVector {
    let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let phase: f64 = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let c = ((1.0 + z) / 2.0).sqrt();
    let s = ((1.0 - z) / 2.0).sqrt();
    StateVector {
        n_qubits: 1,
        amps: vec![
            Complex64::new(c, 0.0),
            Complex64::new(s * phase.cos(), s * phase.sin()),
        ],
    }
}

/// Kronecker product of single-qubit factors in the fixed qubit ordering
/// (factor `j` becomes qubit `j`).
pub fn product_state(factors: &[StateVector]) -> Result<StateVector> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("need at least one factor".into()));
    }
    let mut out = factors[0].clone();
    if out.n_qubits != 1 {
        return Err(Error::DimensionMismatch { context: "factor 0 is not a single qubit".into() });
    }
    for (j, f) in factors.iter().enumerate().skip(1) {
        if f.n_qubits != 1 {
            return Err(Error::DimensionMismatch {
                context: format!("factor {j} is not a single qubit"),
            });
        }
        out = out.tensor(f);
    }
    Ok(out)
}

/// Haar-random product state of `n` qubits, one stream per call site.
pub fn haar_product_state(n: usize, stream: &RngStream) -> StateVector {
    let mut rng = stream.rng();
    let factors: Vec<StateVector> = (0..n).map(|_| haar_random_1q_with(&mut rng)).collect();
    product_state(&factors).expect("factors are single qubits by construction")
}

/// Estimate `⟨σ_k^axis⟩` from `shots` simulated single-shot measurements.
/// Models the `O(1/ε²)` sampling cost of estimating expectations on
/// hardware; exact expectations remain the default everywhere.
pub fn pauli_expectation_sampled<R: rand::Rng>(
    state: &StateVector,
    k: usize,
    axis: Axis,
    shots: usize,
    rng: &mut R,
) -> Result<f64> {
    let exact = state.pauli_expectation(k, axis)?;
    let p_plus = 0.5 * (1.0 + exact);
    let mut plus = 0usize;
    for _ in 0..shots {
        if rng.gen::<f64>() < p_plus {
            plus += 1;
        }
    }
    Ok(2.0 * plus as f64 / shots as f64 - 1.0)
}

/// Purity estimated from sampled Pauli expectations (Pauli route).
pub fn purity_sampled<R: rand::Rng>(
    state: &StateVector,
    k: usize,
    shots: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut s = 0.0;
    for axis in Axis::ALL {
        let e = pauli_expectation_sampled(state, k, axis, shots, rng)?;
        s += e * e;
    }
    Ok(0.5 * (1.0 + s))
}

/// Estimate the Bell-projector expectation `⟨ψ⊗ψ|Π_k|ψ⊗ψ⟩` from binomial
/// sampling of the projective outcome.
pub fn bell_projector_sampled<R: rand::Rng>(
    a: &StateVector,
    b: &StateVector,
    k: usize,
    shots: usize,
    rng: &mut R,
) -> Result<f64> {
    let p = bell_projector_expectation(a, b, k)?.clamp(0.0, 1.0);
    let mut hits = 0usize;
    for _ in 0..shots {
        if rng.gen::<f64>() < p {
            hits += 1;
        }
    }
    Ok(hits as f64 / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hadamard() -> [[Complex64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
    }

    fn cnot() -> [[Complex64; 4]; 4] {
        // basis index = 2·q_target + q_control, control = first qubit
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        [
            [l, o, o, o],
            [o, o, o, l],
            [o, o, l, o],
            [o, l, o, o],
        ]
    }

    /// Random single-qubit unitary from Haar-ish angles, for oracle tests.
    fn random_u2(rng: &mut impl rand::Rng) -> [[Complex64; 2]; 2] {
        let a: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let b: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let g: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let t: f64 = rng.gen::<f64>() * std::f64::consts::FRAC_PI_2;
        let (ct, st) = (t.cos(), t.sin());
        let ea = Complex64::from_polar(1.0, a);
        let eb = Complex64::from_polar(1.0, b);
        let eg = Complex64::from_polar(1.0, g);
        [[ea * ct, eb * st], [-eb.conj() * st * eg, ea.conj() * ct * eg]]
    }

    /// Random 4×4 unitary via Gram-Schmidt on a random complex matrix.
    fn random_u4(rng: &mut impl rand::Rng) -> [[Complex64; 4]; 4] {
        let mut cols = [[c(0.0, 0.0); 4]; 4];
        for col in cols.iter_mut() {
            for entry in col.iter_mut() {
                *entry = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        for j in 0..4 {
            for i in 0..j {
                let mut proj = c(0.0, 0.0);
                for r in 0..4 {
                    proj += cols[i][r].conj() * cols[j][r];
                }
                for r in 0..4 {
                    let reduced = cols[i][r] * proj;
                    cols[j][r] -= reduced;
                }
            }
            let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for r in 0..4 {
                cols[j][r] /= norm;
            }
        }
        // transpose column set into row-major matrix
        let mut u = [[c(0.0, 0.0); 4]; 4];
        for r in 0..4 {
            for cc in 0..4 {
                u[r][cc] = cols[cc][r];
            }
        }
        u
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = RngStream::new(seed, 0).rng();
        let mut amps: Vec<Complex64> = (0..(1usize << n))
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    /// Dense oracle: embed a 2×2 into the full 2^n×2^n and multiply.
    fn dense_apply_1q(state: &StateVector, k: usize, u: &[[Complex64; 2]; 2]) -> Vec<Complex64> {
        let dim = state.amps.len();
        let mut out = vec![c(0.0, 0.0); dim];
        for (row, out_a) in out.iter_mut().enumerate() {
            for col in 0..dim {
                if row & !(1 << k) != col & !(1 << k) {
                    continue;
                }
                let r = (row >> k) & 1;
                let s = (col >> k) & 1;
                *out_a += u[r][s] * state.amps[col];
            }
        }
        out
    }

    /// Dense oracle for a 4×4 on (ka, kb), basis index 2·q_kb + q_ka.
    fn dense_apply_2q(
        state: &StateVector,
        ka: usize,
        kb: usize,
        u: &[[Complex64; 4]; 4],
    ) -> Vec<Complex64> {
        let dim = state.amps.len();
        let mask = !((1usize << ka) | (1usize << kb));
        let mut out = vec![c(0.0, 0.0); dim];
        for (row, out_a) in out.iter_mut().enumerate() {
            for col in 0..dim {
                if row & mask != col & mask {
                    continue;
                }
                let r = ((row >> ka) & 1) | (((row >> kb) & 1) << 1);
                let s = ((col >> ka) & 1) | (((col >> kb) & 1) << 1);
                *out_a += u[r][s] * state.amps[col];
            }
        }
        out
    }

    #[test]
    fn identity_leaves_zero_state() {
        let mut psi = StateVector::zero(1);
        let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        psi.apply_1q(0, &id).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hadamard_makes_plus() {
        let mut psi = StateVector::zero(1);
        psi.apply_1q(0, &hadamard()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(psi.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.amplitudes()[1].re, h, epsilon = 1e-15);
    }

    #[test]
    fn apply_1q_matches_dense_oracle() {
        let mut rng = RngStream::new(11, 0).rng();
        let psi = random_state(3, 42);
        let u = random_u2(&mut rng);
        assert!(unitarity_deviation_2(&u) < 1e-12);
        let expected = dense_apply_1q(&psi, 1, &u);
        let mut actual = psi.clone();
        actual.apply_1q(1, &u).unwrap();
        for (a, e) in actual.amplitudes().iter().zip(expected.iter()) {
            assert!((a - e).norm() < 1e-12);
        }
        assert_abs_diff_eq!(actual.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩: qubit 0 (control) set → target flips to |11⟩
        let mut psi = StateVector::basis(2, 1);
        psi.apply_2q(0, 1, &cnot()).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[3].re, 1.0, epsilon = 1e-15);
        // |00⟩: control clear → unchanged
        let mut psi = StateVector::zero(2);
        psi.apply_2q(0, 1, &cnot()).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn apply_2q_matches_dense_oracle() {
        let mut rng = RngStream::new(12, 0).rng();
        let psi = random_state(4, 43);
        let u = random_u4(&mut rng);
        assert!(unitarity_deviation_4(&u) < 1e-10);
        let expected = dense_apply_2q(&psi, 2, 0, &u);
        let mut actual = psi.clone();
        actual.apply_2q(2, 0, &u).unwrap();
        for (a, e) in actual.amplitudes().iter().zip(expected.iter()) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let mut psi = StateVector::zero(1);
        let bad = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]];
        assert!(matches!(psi.apply_1q(0, &bad), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn rejects_out_of_range_qubit() {
        let mut psi = StateVector::zero(2);
        let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(
            psi.apply_1q(2, &id),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn pauli_expectations_basis_cases() {
        let psi = StateVector::zero(1);
        assert_abs_diff_eq!(psi.pauli_expectation(0, Axis::Z).unwrap(), 1.0, epsilon = 1e-15);
        let mut plus = StateVector::zero(1);
        plus.apply_1q(0, &hadamard()).unwrap();
        assert_abs_diff_eq!(plus.pauli_expectation(0, Axis::X).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn singlet_marginal_is_maximally_mixed() {
        // (|01⟩ − |10⟩)/√2: amplitude index 2 (q1=1) and 1 (q0=1)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![c(0.0, 0.0), c(-h, 0.0), c(h, 0.0), c(0.0, 0.0)];
        let psi = StateVector::from_amplitudes(2, amps).unwrap();
        for axis in Axis::ALL {
            assert_abs_diff_eq!(psi.pauli_expectation(0, axis).unwrap(), 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(psi.purity_single(0).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn purity_product_and_bell() {
        let psi = StateVector::zero(2);
        assert_abs_diff_eq!(psi.purity_single(0).unwrap(), 1.0, epsilon = 1e-14);
        let mut bell = StateVector::zero(2);
        bell.apply_1q(0, &hadamard()).unwrap();
        bell.apply_2q(0, 1, &cnot()).unwrap();
        assert_abs_diff_eq!(bell.purity_single(0).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(purity_bell_oracle(&bell, 0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ghz_marginals_half() {
        let ghz = StateVector::ghz(3);
        for k in 0..3 {
            assert_abs_diff_eq!(ghz.purity_single(k).unwrap(), 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn purity_routes_agree_on_random_states() {
        for (seed, n) in [(1u64, 2usize), (2, 3), (3, 4), (4, 5)] {
            let psi = random_state(n, seed);
            for k in 0..n {
                let trace = psi.purity_single(k).unwrap();
                let pauli = psi.purity_single_pauli(k).unwrap();
                let bell = purity_bell_oracle(&psi, k).unwrap();
                assert!((trace - pauli).abs() < 1e-12, "trace vs pauli at ({n},{k})");
                assert!((trace - bell).abs() < 1e-10, "trace vs bell at ({n},{k})");
                assert!((0.5..=1.0 + 1e-12).contains(&trace));
            }
        }
    }

    #[test]
    fn bell_oracle_rejects_large_registers() {
        let psi = random_state(2, 5);
        assert!(bell_projector_expectation(&psi, &psi, 0).is_ok());
        // limit is checked before allocation
        let big = StateVector::zero(BELL_REGISTER_LIMIT + 1);
        assert!(matches!(
            purity_bell_oracle(&big, 0),
            Err(Error::RegisterTooLarge { .. })
        ));
    }

    #[test]
    fn fidelity_basics() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1);
        assert_abs_diff_eq!(zero.fidelity(&zero).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.fidelity(&one).unwrap(), 0.0, epsilon = 1e-15);
        let a = random_state(3, 7);
        let b = random_state(3, 8);
        // direct-sum oracle
        let mut ip = c(0.0, 0.0);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            ip += x.conj() * y;
        }
        assert_abs_diff_eq!(a.fidelity(&b).unwrap(), ip.norm_sqr(), epsilon = 1e-12);
    }

    #[test]
    fn encoded_fidelity_product_and_ghz() {
        let psi = StateVector::zero(3);
        assert_abs_diff_eq!(encoded_fidelity(&psi), 1.0, epsilon = 1e-12);
        let ghz = StateVector::ghz(2);
        assert_abs_diff_eq!(encoded_fidelity(&ghz), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn encoded_fidelity_matches_dense_tensor_oracle() {
        let phi = random_state(4, 21);
        // dense oracle: build ⊗_k ρ_k explicitly as a 16×16 matrix
        let rhos: Vec<DensityMatrix1Q> =
            (0..4).map(|k| phi.reduced_density_matrix(k).unwrap()).collect();
        let dim = 16usize;
        let mut f = c(0.0, 0.0);
        for row in 0..dim {
            for col in 0..dim {
                let mut entry = c(1.0, 0.0);
                for (k, rho) in rhos.iter().enumerate() {
                    let r = (row >> k) & 1;
                    let s = (col >> k) & 1;
                    entry *= rho.entries[r][s];
                }
                f += phi.amplitudes()[row].conj() * entry * phi.amplitudes()[col];
            }
        }
        assert_abs_diff_eq!(encoded_fidelity(&phi), f.re, epsilon = 1e-10);
        assert!(f.im.abs() < 1e-12);
    }

    #[test]
    fn haar_states_are_normalized_and_deterministic() {
        let s = RngStream::new(99, 4);
        let a = haar_random_1q(&s);
        let b = haar_random_1q(&s);
        assert_eq!(a, b);
        assert_abs_diff_eq!(a.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn haar_z_moment_vanishes() {
        let mut rng = RngStream::new(123, 0).rng();
        let trials = 100_000;
        let mut mean = 0.0;
        for _ in 0..trials {
            let q = haar_random_1q_with(&mut rng);
            mean += q.pauli_expectation(0, Axis::Z).unwrap();
        }
        mean /= trials as f64;
        assert!(mean.abs() < 0.01, "⟨Z⟩ mean {mean}");
    }

    #[test]
    fn product_state_ordering() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1);
        let mut plus = StateVector::zero(1);
        plus.apply_1q(0, &hadamard()).unwrap();
        let psi = product_state(&[zero.clone(), zero.clone()]).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        // [|+⟩, |1⟩] → (|01⟩ + |11⟩)/√2 → indices 2 and 3
        let psi = product_state(&[plus, one]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(psi.amplitudes()[2].re, h, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitudes()[3].re, h, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn random_product_state_has_unit_purities() {
        let s = RngStream::new(5, 9);
        let psi = haar_product_state(5, &s);
        for k in 0..5 {
            assert_abs_diff_eq!(psi.purity_single(k).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_preserved_over_many_gates() {
        let mut rng = RngStream::new(31, 0).rng();
        let mut psi = random_state(4, 17);
        for _ in 0..10_000 {
            let k = rng.gen_range(0..4);
            let u = random_u2(&mut rng);
            psi.apply_1q_raw(k, &u);
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-8, "drift {}", psi.norm_sqr() - 1.0);
    }

    #[test]
    fn json_and_binary_round_trip() {
        let psi = random_state(3, 77);
        let j = psi.to_json();
        let back = StateVector::from_json(&j).unwrap();
        assert_eq!(psi, back);
        let mut buf = Vec::new();
        psi.write_binary(&mut buf).unwrap();
        let back = StateVector::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(psi, back);
    }

    #[test]
    fn sampled_pauli_converges() {
        let psi = random_state(2, 55);
        let exact = psi.pauli_expectation(0, Axis::X).unwrap();
        let mut rng = RngStream::new(1, 1).rng();
        let est = pauli_expectation_sampled(&psi, 0, Axis::X, 200_000, &mut rng).unwrap();
        assert!((est - exact).abs() < 0.01);
    }

    #[test]
    fn density_matrix_eigenvalues_in_range() {
        let psi = random_state(4, 91);
        for k in 0..4 {
            let rho = psi.reduced_density_matrix(k).unwrap();
            assert!(rho.hermiticity_deviation() < 1e-12);
            assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
            let [l0, l1] = rho.eigenvalues();
            assert!((-1e-10..=1.0 + 1e-10).contains(&l0));
            assert!((-1e-10..=1.0 + 1e-10).contains(&l1));
        }
    }
}
