//! Parameterized circuits and the three ansatz families.
//!
//! A [`Circuit`] is an ordered gate list over `M` parameter slots; several
//! gates may share a slot (the Ising layers do). Three builders are
//! provided:
//!
//! - [`build_he`] — hardware-efficient: per layer a nearest-neighbor CNOT
//!   ladder followed by two parameterized rotations per qubit, `M = 2nd`.
//! - [`build_ising`] — transverse-field Ising evolution: per layer the
//!   unitary `exp(−i H_xx θ_j^x) · exp(−i H_z θ_j^z)` with
//!   `H_xx = Σ X_i X_{i+1}` (open chain by default) and `H_z = Σ Z_i`,
//!   realized as commuting shared-slot gates, `M = 2d`. The Z half-layer is
//!   applied first so the layer equals the operator product as written.
//! - [`build_fermion`] — brickwork of Givens rotations: odd sublayers pair
//!   `(0,1),(2,3),…`, even sublayers `(1,2),(3,4),…`, one parameter per
//!   gate, `M = d(n−1)` per two-sublayer block.
//!
//! Rotation gates record an `angle_scale` so that both conventions found in
//! practice coexist explicitly: `e^{−iθσ/2}` (scale ½, the default) and
//! `e^{−iθσ}` (scale 1, used by the Ising evolution and available for the
//! hardware-efficient family via [`build_he_scaled`]).
//!
//! Derivatives are exact: [`derivative_state`] inserts each slot-holding
//! gate's tangent generator by the product rule, which handles shared slots,
//! and [`shift_rule_cost_gradient`] implements the ±π/2 parameter-shift rule
//! on doubled-register Bell-projector expectations for Pauli-½ slots.

use crate::error::{Error, Result};
use crate::sim::{bell_projector_expectation, encoded_fidelity, Axis, StateVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Named fixed single-qubit gates (Clifford import).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixed1Q {
    H,
    S,
}

/// Gate kinds supported by the circuit model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    /// Fixed single-qubit gate.
    Fixed1Q(Fixed1Q),
    /// CNOT with (control, target) = (qubits[0], qubits[1]).
    Cnot,
    /// `exp(−i θ · scale · σ^axis)` on one qubit.
    Rot1Q(Axis),
    /// `exp(−i θ · scale · X⊗X)` on a qubit pair.
    RotXX,
    /// Givens rotation: identity on `|00⟩,|11⟩`, rotation by θ in
    /// `span{|01⟩,|10⟩}` (`|01⟩ → cosθ|01⟩ + sinθ|10⟩` with the first
    /// listed qubit as the low bit).
    Givens,
}

/// One gate: kind, targets, optional parameter slot, generator scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// One or two qubit indices; `qubits[1]` is ignored for 1-qubit kinds.
    pub qubits: [usize; 2],
    pub param_slot: Option<usize>,
    pub angle_scale: f64,
}

/// A local operator to apply to a state: either 2×2 on one qubit or 4×4 on
/// a pair (subspace index `2·q_kb + q_ka`).
pub enum LocalOp {
    One { k: usize, m: [[Complex64; 2]; 2] },
    Two { ka: usize, kb: usize, m: [[Complex64; 4]; 4] },
}

impl LocalOp {
    pub fn apply_raw(&self, state: &mut StateVector) {
        match self {
            LocalOp::One { k, m } => state.apply_1q_raw(*k, m),
            LocalOp::Two { ka, kb, m } => state.apply_2q_raw(*ka, *kb, m),
        }
    }
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rot_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    // exp(−i·angle·σ) = cos(angle)·I − i·sin(angle)·σ
    let (cos, sin) = (angle.cos(), angle.sin());
    match axis {
        Axis::X => [[c64(cos, 0.0), c64(0.0, -sin)], [c64(0.0, -sin), c64(cos, 0.0)]],
        Axis::Y => [[c64(cos, 0.0), c64(-sin, 0.0)], [c64(sin, 0.0), c64(cos, 0.0)]],
        Axis::Z => [
            [Complex64::from_polar(1.0, -angle), c64(0.0, 0.0)],
            [c64(0.0, 0.0), Complex64::from_polar(1.0, angle)],
        ],
    }
}

fn xx_matrix(angle: f64) -> [[Complex64; 4]; 4] {
    // exp(−i·angle·X⊗X): X⊗X is the antidiagonal permutation b → b^3
    let cos = c64(angle.cos(), 0.0);
    let msin = c64(0.0, -angle.sin());
    let o = c64(0.0, 0.0);
    [
        [cos, o, o, msin],
        [o, cos, msin, o],
        [o, msin, cos, o],
        [msin, o, o, cos],
    ]
}

fn givens_matrix(angle: f64) -> [[Complex64; 4]; 4] {
    let (cos, sin) = (angle.cos(), angle.sin());
    let o = c64(0.0, 0.0);
    let l = c64(1.0, 0.0);
    // subspace index 1 = first qubit set (|10⟩ written q_a q_b), 2 = second
    [
        [l, o, o, o],
        [o, c64(cos, 0.0), c64(-sin, 0.0), o],
        [o, c64(sin, 0.0), c64(cos, 0.0), o],
        [o, o, o, l],
    ]
}

fn h_matrix() -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c64(h, 0.0), c64(h, 0.0)], [c64(h, 0.0), c64(-h, 0.0)]]
}

fn s_matrix() -> [[Complex64; 2]; 2] {
    [[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(0.0, 1.0)]]
}

fn cnot_matrix() -> [[Complex64; 4]; 4] {
    let o = c64(0.0, 0.0);
    let l = c64(1.0, 0.0);
    // control = low bit of the subspace index
    [
        [l, o, o, o],
        [o, o, o, l],
        [o, o, l, o],
        [o, l, o, o],
    ]
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self.kind {
            GateKind::Fixed1Q(_) | GateKind::Rot1Q(_) => 1,
            GateKind::Cnot | GateKind::RotXX | GateKind::Givens => 2,
        }
    }

    fn angle(&self, theta: &[f64]) -> f64 {
        self.param_slot
            .map(|s| theta[s] * self.angle_scale)
            .unwrap_or(0.0)
    }

    /// The gate's unitary at the given parameters.
    pub fn unitary(&self, theta: &[f64]) -> LocalOp {
        let [qa, qb] = self.qubits;
        match self.kind {
            GateKind::Fixed1Q(Fixed1Q::H) => LocalOp::One { k: qa, m: h_matrix() },
            GateKind::Fixed1Q(Fixed1Q::S) => LocalOp::One { k: qa, m: s_matrix() },
            GateKind::Cnot => LocalOp::Two { ka: qa, kb: qb, m: cnot_matrix() },
            GateKind::Rot1Q(axis) => LocalOp::One { k: qa, m: rot_matrix(axis, self.angle(theta)) },
            GateKind::RotXX => LocalOp::Two { ka: qa, kb: qb, m: xx_matrix(self.angle(theta)) },
            GateKind::Givens => {
                // Givens ignores angle_scale: the angle is the parameter
                let angle = self.param_slot.map(|s| theta[s]).unwrap_or(0.0);
                LocalOp::Two { ka: qa, kb: qb, m: givens_matrix(angle) }
            }
        }
    }

    /// Inverse unitary (used by the reverse sweeps and circuit adjoints).
    pub fn inverse_unitary(&self, theta: &[f64]) -> LocalOp {
        let [qa, qb] = self.qubits;
        match self.kind {
            GateKind::Fixed1Q(Fixed1Q::H) => LocalOp::One { k: qa, m: h_matrix() },
            GateKind::Fixed1Q(Fixed1Q::S) => {
                let m = [[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(0.0, -1.0)]];
                LocalOp::One { k: qa, m }
            }
            GateKind::Cnot => LocalOp::Two { ka: qa, kb: qb, m: cnot_matrix() },
            GateKind::Rot1Q(axis) => {
                LocalOp::One { k: qa, m: rot_matrix(axis, -self.angle(theta)) }
            }
            GateKind::RotXX => LocalOp::Two { ka: qa, kb: qb, m: xx_matrix(-self.angle(theta)) },
            GateKind::Givens => {
                let angle = self.param_slot.map(|s| theta[s]).unwrap_or(0.0);
                LocalOp::Two { ka: qa, kb: qb, m: givens_matrix(-angle) }
            }
        }
    }

    /// Tangent insertion `A = dU/dθ · U†`, constant along the one-parameter
    /// group. `None` for fixed gates.
    pub fn tangent(&self) -> Option<LocalOp> {
        self.param_slot?;
        let [qa, qb] = self.qubits;
        let op = match self.kind {
            GateKind::Rot1Q(axis) => {
                // A = −i·scale·σ
                let sigma = axis.matrix();
                let f = c64(0.0, -self.angle_scale);
                let m = [
                    [f * sigma[0][0], f * sigma[0][1]],
                    [f * sigma[1][0], f * sigma[1][1]],
                ];
                LocalOp::One { k: qa, m }
            }
            GateKind::RotXX => {
                let f = c64(0.0, -self.angle_scale);
                let o = c64(0.0, 0.0);
                let m = [
                    [o, o, o, f],
                    [o, o, f, o],
                    [o, f, o, o],
                    [f, o, o, o],
                ];
                LocalOp::Two { ka: qa, kb: qb, m }
            }
            GateKind::Givens => {
                // A = |10⟩⟨01| − |01⟩⟨10| in the pair subspace
                let o = c64(0.0, 0.0);
                let l = c64(1.0, 0.0);
                let m = [
                    [o, o, o, o],
                    [o, o, -l, o],
                    [o, l, o, o],
                    [o, o, o, o],
                ];
                LocalOp::Two { ka: qa, kb: qb, m }
            }
            GateKind::Fixed1Q(_) | GateKind::Cnot => return None,
        };
        Some(op)
    }

    /// Whether the gate's generator is a single Pauli string with scale ½,
    /// the precondition of the ±π/2 shift rule.
    pub fn is_pauli_half(&self) -> bool {
        matches!(self.kind, GateKind::Rot1Q(_) | GateKind::RotXX)
            && (self.angle_scale - 0.5).abs() < 1e-12
    }
}

/// Ordered gate sequence over `M` parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub n_params: usize,
}

impl Circuit {
    pub fn empty(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), n_params: 0 }
    }

    /// Check structural invariants: valid qubits, every slot in range and
    /// referenced by at least one gate.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n_params];
        for g in &self.gates {
            for q in &g.qubits[..g.arity()] {
                if *q >= self.n_qubits {
                    return Err(Error::QubitOutOfRange { index: *q, n_qubits: self.n_qubits });
                }
            }
            if g.arity() == 2 && g.qubits[0] == g.qubits[1] {
                return Err(Error::InvalidArgument("two-qubit gate on equal qubits".into()));
            }
            if let Some(s) = g.param_slot {
                if s >= self.n_params {
                    return Err(Error::SlotOutOfRange { slot: s, n_params: self.n_params });
                }
                seen[s] = true;
            }
        }
        if let Some(unused) = seen.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!("parameter slot {unused} is unreferenced")));
        }
        Ok(())
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                context: format!("theta has {} entries, circuit has {} slots", theta.len(), self.n_params),
            });
        }
        Ok(())
    }

    /// Gates holding a slot, in circuit order.
    pub fn gates_for_slot(&self, slot: usize) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.param_slot == Some(slot))
            .map(|(i, _)| i)
            .collect()
    }

    // --- serialization ---------------------------------------------------

    pub fn to_json(&self) -> serde_json::Value {
        let gates: Vec<serde_json::Value> = self.gates.iter().map(gate_to_json).collect();
        serde_json::json!({
            "n": self.n_qubits,
            "m": self.n_params,
            "gates": gates,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let n = v["n"].as_u64().ok_or_else(|| Error::Serialization("missing n".into()))? as usize;
        let m = v["m"].as_u64().ok_or_else(|| Error::Serialization("missing m".into()))? as usize;
        let gates_json =
            v["gates"].as_array().ok_or_else(|| Error::Serialization("missing gates".into()))?;
        let gates: Result<Vec<Gate>> = gates_json.iter().map(gate_from_json).collect();
        let circuit = Self { n_qubits: n, gates: gates?, n_params: m };
        circuit.validate()?;
        Ok(circuit)
    }
}

fn gate_to_json(g: &Gate) -> serde_json::Value {
    let q: Vec<usize> = g.qubits[..g.arity()].to_vec();
    match g.kind {
        GateKind::Cnot => serde_json::json!({"g": "cnot", "q": q}),
        GateKind::Fixed1Q(Fixed1Q::H) => serde_json::json!({"g": "h", "q": q}),
        GateKind::Fixed1Q(Fixed1Q::S) => serde_json::json!({"g": "s", "q": q}),
        GateKind::Rot1Q(axis) => serde_json::json!({
            "g": "rot",
            "axis": match axis { Axis::X => "x", Axis::Y => "y", Axis::Z => "z" },
            "q": q,
            "p": g.param_slot,
            "s": g.angle_scale,
        }),
        GateKind::RotXX => serde_json::json!({
            "g": "xx", "q": q, "p": g.param_slot, "s": g.angle_scale,
        }),
        GateKind::Givens => serde_json::json!({
            "g": "givens", "q": q, "p": g.param_slot,
        }),
    }
}

fn gate_from_json(v: &serde_json::Value) -> Result<Gate> {
    let kind = v["g"].as_str().ok_or_else(|| Error::Serialization("gate missing g".into()))?;
    let q: Vec<usize> = v["q"]
        .as_array()
        .ok_or_else(|| Error::Serialization("gate missing q".into()))?
        .iter()
        .map(|x| x.as_u64().unwrap_or(0) as usize)
        .collect();
    let qubits = [q.first().copied().unwrap_or(0), q.get(1).copied().unwrap_or(0)];
    let slot = v["p"].as_u64().map(|s| s as usize);
    let scale = v["s"].as_f64().unwrap_or(0.5);
    let gate = match kind {
        "cnot" => Gate { kind: GateKind::Cnot, qubits, param_slot: None, angle_scale: 1.0 },
        "h" => Gate { kind: GateKind::Fixed1Q(Fixed1Q::H), qubits, param_slot: None, angle_scale: 1.0 },
        "s" => Gate { kind: GateKind::Fixed1Q(Fixed1Q::S), qubits, param_slot: None, angle_scale: 1.0 },
        "rot" => {
            let axis = match v["axis"].as_str() {
                Some("x") => Axis::X,
                Some("y") => Axis::Y,
                Some("z") => Axis::Z,
                other => {
                    return Err(Error::Serialization(format!("bad rot axis {other:?}")));
                }
            };
            Gate { kind: GateKind::Rot1Q(axis), qubits, param_slot: slot, angle_scale: scale }
        }
        "xx" => Gate { kind: GateKind::RotXX, qubits, param_slot: slot, angle_scale: scale },
        "givens" => Gate { kind: GateKind::Givens, qubits, param_slot: slot, angle_scale: 1.0 },
        other => return Err(Error::Serialization(format!("unknown gate kind {other}"))),
    };
    Ok(gate)
}

/// `{"theta":[..]}` companion file for a circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaFile {
    pub theta: Vec<f64>,
}

// --- builders -------------------------------------------------------------

/// Hardware-efficient ansatz with the default (Y, Z) axes and scale ½.
pub fn build_he(n: usize, depth: usize) -> Result<Circuit> {
    build_he_scaled(n, depth, (Axis::Y, Axis::Z), 0.5)
}

/// Hardware-efficient ansatz: per layer a CNOT ladder (controls `j`,
/// targets `j+1`), then per qubit one `axis.1` rotation and one `axis.0`
/// rotation, each with its own slot; `M = 2nd`. The second-axis rotations
/// act first so a layer reads `[⊗ e^{−i·s·θ¹σ^{a1}} e^{−i·s·θ²σ^{a2}}]·W`
/// as an operator product. `scale` selects the rotation convention
/// (½ for `e^{−iθσ/2}`, 1 for `e^{−iθσ}`).
pub fn build_he_scaled(
    n: usize,
    depth: usize,
    axes: (Axis, Axis),
    scale: f64,
) -> Result<Circuit> {
    if n < 2 || depth < 1 {
        return Err(Error::InvalidArgument(format!("need n ≥ 2 and d ≥ 1, got n={n}, d={depth}")));
    }
    let mut gates = Vec::new();
    for layer in 0..depth {
        for j in 0..n - 1 {
            gates.push(Gate {
                kind: GateKind::Cnot,
                qubits: [j, j + 1],
                param_slot: None,
                angle_scale: 1.0,
            });
        }
        let base = 2 * n * layer;
        for k in 0..n {
            gates.push(Gate {
                kind: GateKind::Rot1Q(axes.1),
                qubits: [k, 0],
                param_slot: Some(base + n + k),
                angle_scale: scale,
            });
        }
        for k in 0..n {
            gates.push(Gate {
                kind: GateKind::Rot1Q(axes.0),
                qubits: [k, 0],
                param_slot: Some(base + k),
                angle_scale: scale,
            });
        }
    }
    let circuit = Circuit { n_qubits: n, gates, n_params: 2 * n * depth };
    circuit.validate()?;
    Ok(circuit)
}

/// Ising-evolution ansatz on an open chain: layer `j` applies
/// `exp(−i H_xx θ_j^x) · exp(−i H_z θ_j^z)` with slot `2j` for `θ_j^x` and
/// slot `2j+1` for `θ_j^z`; `M = 2d`. Set `periodic` to close the chain.
pub fn build_ising(n: usize, depth: usize, periodic: bool) -> Result<Circuit> {
    if n < 2 || depth < 1 {
        return Err(Error::InvalidArgument(format!("need n ≥ 2 and d ≥ 1, got n={n}, d={depth}")));
    }
    let mut gates = Vec::new();
    for layer in 0..depth {
        let slot_x = 2 * layer;
        let slot_z = 2 * layer + 1;
        // Z half-layer first: rightmost factor of the operator product
        for k in 0..n {
            gates.push(Gate {
                kind: GateKind::Rot1Q(Axis::Z),
                qubits: [k, 0],
                param_slot: Some(slot_z),
                angle_scale: 1.0,
            });
        }
        for i in 0..n - 1 {
            gates.push(Gate {
                kind: GateKind::RotXX,
                qubits: [i, i + 1],
                param_slot: Some(slot_x),
                angle_scale: 1.0,
            });
        }
        if periodic && n > 2 {
            gates.push(Gate {
                kind: GateKind::RotXX,
                qubits: [n - 1, 0],
                param_slot: Some(slot_x),
                angle_scale: 1.0,
            });
        }
    }
    let circuit = Circuit { n_qubits: n, gates, n_params: 2 * depth };
    circuit.validate()?;
    Ok(circuit)
}

/// Free-fermion brickwork of Givens rotations, `M = d(n−1)`.
pub fn build_fermion(n: usize, depth: usize) -> Result<Circuit> {
    if n < 2 || depth < 1 {
        return Err(Error::InvalidArgument(format!("need n ≥ 2 and d ≥ 1, got n={n}, d={depth}")));
    }
    let mut gates = Vec::new();
    let mut slot = 0;
    for _ in 0..depth {
        let mut pair = 0;
        while pair + 1 < n {
            gates.push(Gate {
                kind: GateKind::Givens,
                qubits: [pair, pair + 1],
                param_slot: Some(slot),
                angle_scale: 1.0,
            });
            slot += 1;
            pair += 2;
        }
        let mut pair = 1;
        while pair + 1 < n {
            gates.push(Gate {
                kind: GateKind::Givens,
                qubits: [pair, pair + 1],
                param_slot: Some(slot),
                angle_scale: 1.0,
            });
            slot += 1;
            pair += 2;
        }
    }
    let circuit = Circuit { n_qubits: n, gates, n_params: slot };
    circuit.validate()?;
    Ok(circuit)
}

/// The three trainable circuit families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzFamily {
    He,
    Ising,
    Fermion,
}

impl AnsatzFamily {
    /// Parameter count at a given depth.
    pub fn params_for_depth(&self, n: usize, depth: usize) -> usize {
        match self {
            AnsatzFamily::He => 2 * n * depth,
            AnsatzFamily::Ising => 2 * depth,
            AnsatzFamily::Fermion => depth * (n - 1),
        }
    }

    /// Smallest depth whose parameter count reaches `m`.
    pub fn depth_for_params(&self, n: usize, m: usize) -> usize {
        let per_layer = self.params_for_depth(n, 1);
        m.div_ceil(per_layer).max(1)
    }

    pub fn build(&self, n: usize, depth: usize) -> Result<Circuit> {
        match self {
            AnsatzFamily::He => build_he(n, depth),
            AnsatzFamily::Ising => build_ising(n, depth, false),
            AnsatzFamily::Fermion => build_fermion(n, depth),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnsatzFamily::He => "he",
            AnsatzFamily::Ising => "ising",
            AnsatzFamily::Fermion => "fermion",
        }
    }
}

impl std::str::FromStr for AnsatzFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "he" => Ok(AnsatzFamily::He),
            "ising" => Ok(AnsatzFamily::Ising),
            "fermion" => Ok(AnsatzFamily::Fermion),
            other => Err(Error::InvalidArgument(format!("unknown ansatz family {other}"))),
        }
    }
}

// --- application and derivatives -------------------------------------------

/// Apply `U(θ)` to a state.
pub fn apply_circuit(c: &Circuit, theta: &[f64], state: &StateVector) -> Result<StateVector> {
    c.check_theta(theta)?;
    if state.n_qubits() != c.n_qubits {
        return Err(Error::DimensionMismatch {
            context: format!("state has {} qubits, circuit {}", state.n_qubits(), c.n_qubits),
        });
    }
    let mut out = state.clone();
    for g in &c.gates {
        g.unitary(theta).apply_raw(&mut out);
    }
    Ok(out)
}

/// Apply `U†(θ)` (reversed gates, inverted angles).
pub fn apply_circuit_adjoint(
    c: &Circuit,
    theta: &[f64],
    state: &StateVector,
) -> Result<StateVector> {
    c.check_theta(theta)?;
    if state.n_qubits() != c.n_qubits {
        return Err(Error::DimensionMismatch {
            context: format!("state has {} qubits, circuit {}", state.n_qubits(), c.n_qubits),
        });
    }
    let mut out = state.clone();
    for g in c.gates.iter().rev() {
        g.inverse_unitary(theta).apply_raw(&mut out);
    }
    Ok(out)
}

/// `∂_slot [U(θ)] |ψ⟩` by the product rule: for every gate holding the slot,
/// insert its tangent generator after the gate and sum the branches. Exact
/// for shared slots; the result is unnormalized.
pub fn derivative_state(
    c: &Circuit,
    theta: &[f64],
    state: &StateVector,
    slot: usize,
) -> Result<StateVector> {
    if slot >= c.n_params {
        return Err(Error::SlotOutOfRange { slot, n_params: c.n_params });
    }
    Ok(derivative_states_filtered(c, theta, state, Some(slot))?.remove(0))
}

/// All `M` derivative states `∂_m[U(θ)]|ψ⟩` in one forward sweep.
pub fn derivative_states(
    c: &Circuit,
    theta: &[f64],
    state: &StateVector,
) -> Result<Vec<StateVector>> {
    derivative_states_filtered(c, theta, state, None)
}

fn derivative_states_filtered(
    c: &Circuit,
    theta: &[f64],
    state: &StateVector,
    only_slot: Option<usize>,
) -> Result<Vec<StateVector>> {
    c.check_theta(theta)?;
    if state.n_qubits() != c.n_qubits {
        return Err(Error::DimensionMismatch {
            context: format!("state has {} qubits, circuit {}", state.n_qubits(), c.n_qubits),
        });
    }
    let slots: Vec<usize> = match only_slot {
        Some(s) => vec![s],
        None => (0..c.n_params).collect(),
    };
    let slot_pos: Vec<Option<usize>> = {
        let mut pos = vec![None; c.n_params];
        for (i, s) in slots.iter().enumerate() {
            pos[*s] = Some(i);
        }
        pos
    };
    let dim = 1usize << c.n_qubits;
    let zero = StateVector::from_raw(c.n_qubits, vec![Complex64::new(0.0, 0.0); dim]);
    let mut derivs = vec![zero; slots.len()];
    let mut active: Vec<usize> = Vec::new();
    let mut cur = state.clone();
    for g in &c.gates {
        let u = g.unitary(theta);
        u.apply_raw(&mut cur);
        for idx in &active {
            u.apply_raw(&mut derivs[*idx]);
        }
        if let Some(slot) = g.param_slot {
            if let Some(idx) = slot_pos[slot] {
                let mut branch = cur.clone();
                g.tangent()
                    .expect("parametric gates always have a tangent")
                    .apply_raw(&mut branch);
                for (d, b) in derivs[idx].amps_mut().iter_mut().zip(branch.amplitudes()) {
                    *d += b;
                }
                if !active.contains(&idx) {
                    active.push(idx);
                }
            }
        }
    }
    Ok(derivs)
}

/// `∂_slot E_k(U(θ)|ψ⟩)` via the ±π/2 parameter-shift rule on doubled-
/// register Bell-projector expectations:
/// `∂E = −2(⟨Π_k⟩_{θ+π/2} − ⟨Π_k⟩_{θ−π/2})`, each expectation taken with
/// one register copy shifted and one held at θ. Requires the slot to be
/// held by exactly one Pauli-string gate with scale ½.
pub fn shift_rule_purity_gradient(
    c: &Circuit,
    theta: &[f64],
    state: &StateVector,
    k: usize,
    slot: usize,
) -> Result<f64> {
    check_shift_slot(c, slot)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let base = apply_circuit(c, theta, state)?;
    let mut tp = theta.to_vec();
    tp[slot] += half_pi;
    let plus = apply_circuit(c, &tp, state)?;
    let mut tm = theta.to_vec();
    tm[slot] -= half_pi;
    let minus = apply_circuit(c, &tm, state)?;
    let f_plus = bell_projector_expectation(&plus, &base, k)?;
    let f_minus = bell_projector_expectation(&minus, &base, k)?;
    Ok(-2.0 * (f_plus - f_minus))
}

/// `∂_slot C_train` over a batch of states via the shift rule,
/// `C_train = 1 − (1/LN) Σ_{ℓ,k} E_k`.
pub fn shift_rule_cost_gradient(
    c: &Circuit,
    theta: &[f64],
    states: &[StateVector],
    slot: usize,
) -> Result<f64> {
    check_shift_slot(c, slot)?;
    let n = c.n_qubits as f64;
    let l = states.len() as f64;
    let mut acc = 0.0;
    for psi in states {
        for k in 0..c.n_qubits {
            acc += shift_rule_purity_gradient(c, theta, psi, k, slot)?;
        }
    }
    Ok(-acc / (l * n))
}

fn check_shift_slot(c: &Circuit, slot: usize) -> Result<()> {
    if slot >= c.n_params {
        return Err(Error::SlotOutOfRange { slot, n_params: c.n_params });
    }
    let holders = c.gates_for_slot(slot);
    if holders.len() != 1 {
        return Err(Error::ShiftRuleUnsupported {
            slot,
            reason: format!("slot shared by {} gates", holders.len()),
        });
    }
    let gate = &c.gates[holders[0]];
    if !gate.is_pauli_half() {
        return Err(Error::ShiftRuleUnsupported {
            slot,
            reason: "generator is not a Pauli string with scale 1/2".into(),
        });
    }
    Ok(())
}

/// Fidelity of the reconstruction `⟨ψ|U†(⊗_k ρ_k)U|ψ⟩` for the encoded
/// state `U(θ)|ψ⟩`; see [`encoded_fidelity`].
pub fn reconstruction_fidelity(psi: &StateVector, c: &Circuit, theta: &[f64]) -> Result<f64> {
    let phi = apply_circuit(c, theta, psi)?;
    Ok(encoded_fidelity(&phi))
}
