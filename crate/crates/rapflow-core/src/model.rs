//! Model representation: block structure, the `C^k` / `D^{kl}` matrices,
//! checkable validity conditions, canonical constructors, and censoring of
//! the zero-slope regime.

use crate::linalg::{expm, norm_inf, ones, spectral_abscissa, ColVector, Matrix, RowVector};
use crate::{tol, Error, Result};
use std::fmt;
use std::ops::Range;

/// Slope regime of the level process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Plus,
    Minus,
    Zero,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Plus, Regime::Minus, Regime::Zero];

    /// Level slope while the orbit sits in this regime.
    pub fn slope(self) -> f64 {
        match self {
            Regime::Plus => 1.0,
            Regime::Minus => -1.0,
            Regime::Zero => 0.0,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Plus => "plus",
            Regime::Minus => "minus",
            Regime::Zero => "zero",
        })
    }
}

/// Per-regime block sizes. Block `i` of a regime occupies a contiguous
/// coordinate range; the regime dimension is the sum of its block sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    plus: Vec<usize>,
    minus: Vec<usize>,
    zero: Vec<usize>,
}

impl BlockStructure {
    pub fn new(plus: Vec<usize>, minus: Vec<usize>, zero: Vec<usize>) -> Result<Self> {
        if plus.is_empty() || minus.is_empty() {
            return Err(Error::Dimension {
                what: "at least one block required in each of the plus and minus regimes".into(),
            });
        }
        for (name, sizes) in [("plus", &plus), ("minus", &minus), ("zero", &zero)] {
            if sizes.iter().any(|&s| s == 0) {
                return Err(Error::Dimension {
                    what: format!("{name} regime has an empty block"),
                });
            }
        }
        Ok(BlockStructure { plus, minus, zero })
    }

    /// One block of size 1 per state, the natural structure of a Markov
    /// jump process.
    pub fn singletons(n_plus: usize, n_minus: usize, n_zero: usize) -> Result<Self> {
        BlockStructure::new(vec![1; n_plus], vec![1; n_minus], vec![1; n_zero])
    }

    pub fn sizes(&self, k: Regime) -> &[usize] {
        match k {
            Regime::Plus => &self.plus,
            Regime::Minus => &self.minus,
            Regime::Zero => &self.zero,
        }
    }

    pub fn n_blocks(&self, k: Regime) -> usize {
        self.sizes(k).len()
    }

    /// Regime dimension: sum of its block sizes.
    pub fn eta(&self, k: Regime) -> usize {
        self.sizes(k).iter().sum()
    }

    /// Coordinate range of block `i` within regime `k`.
    pub fn range(&self, k: Regime, i: usize) -> Range<usize> {
        let sizes = self.sizes(k);
        let start: usize = sizes[..i].iter().sum();
        start..start + sizes[i]
    }

    pub fn has_zero(&self) -> bool {
        !self.zero.is_empty()
    }
}

/// Zero-regime matrices, present exactly when the structure has zero blocks.
#[derive(Debug, Clone)]
pub struct ZeroBlocks {
    pub c_zero: Matrix,
    pub d_plus_zero: Matrix,
    pub d_zero_plus: Matrix,
    pub d_minus_zero: Matrix,
    pub d_zero_minus: Matrix,
}

/// Orbit point used to seed the heuristic intensity check; constructors
/// record their natural starting vectors here.
#[derive(Debug, Clone)]
pub struct SeedOrbit {
    pub regime: Regime,
    pub block: usize,
    /// Full regime-length vector supported on `block`.
    pub a: RowVector,
}

/// A jump destination together with its intensity at a given orbit point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCandidate {
    pub regime: Regime,
    pub block: usize,
    pub weight: f64,
}

/// A RAP-modulated fluid model. Level slopes are fixed at +1 (plus), -1
/// (minus), 0 (zero); general slopes reduce to this form by a time change
/// and are rejected at the input layer.
#[derive(Debug, Clone)]
pub struct RapFluidModel {
    structure: BlockStructure,
    c_plus: Matrix,
    c_minus: Matrix,
    d_plus_minus: Matrix,
    d_minus_plus: Matrix,
    zero: Option<ZeroBlocks>,
    seed_orbits: Vec<SeedOrbit>,
}

fn check_dims(m: &Matrix, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimension {
            what: format!(
                "{name} must be {rows}x{cols}, got {}x{}",
                m.nrows(),
                m.ncols()
            ),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: name.into() });
    }
    Ok(())
}

impl RapFluidModel {
    pub fn new(
        structure: BlockStructure,
        c_plus: Matrix,
        c_minus: Matrix,
        d_plus_minus: Matrix,
        d_minus_plus: Matrix,
        zero: Option<ZeroBlocks>,
    ) -> Result<Self> {
        let ep = structure.eta(Regime::Plus);
        let em = structure.eta(Regime::Minus);
        let ez = structure.eta(Regime::Zero);
        check_dims(&c_plus, ep, ep, "C_plus")?;
        check_dims(&c_minus, em, em, "C_minus")?;
        check_dims(&d_plus_minus, ep, em, "D_plus_minus")?;
        check_dims(&d_minus_plus, em, ep, "D_minus_plus")?;
        match (&zero, structure.has_zero()) {
            (Some(z), true) => {
                check_dims(&z.c_zero, ez, ez, "C_zero")?;
                check_dims(&z.d_plus_zero, ep, ez, "D_plus_zero")?;
                check_dims(&z.d_zero_plus, ez, ep, "D_zero_plus")?;
                check_dims(&z.d_minus_zero, em, ez, "D_minus_zero")?;
                check_dims(&z.d_zero_minus, ez, em, "D_zero_minus")?;
            }
            (None, false) => {}
            (Some(_), false) => {
                return Err(Error::Dimension {
                    what: "zero-regime matrices supplied but the structure has no zero blocks"
                        .into(),
                })
            }
            (None, true) => {
                return Err(Error::Dimension {
                    what: "structure declares zero blocks but no zero-regime matrices".into(),
                })
            }
        }
        Ok(RapFluidModel {
            structure,
            c_plus,
            c_minus,
            d_plus_minus,
            d_minus_plus,
            zero,
            seed_orbits: Vec::new(),
        })
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn eta(&self, k: Regime) -> usize {
        self.structure.eta(k)
    }

    pub fn has_zero(&self) -> bool {
        self.structure.has_zero()
    }

    pub fn regimes(&self) -> Vec<Regime> {
        let mut r = vec![Regime::Plus, Regime::Minus];
        if self.has_zero() {
            r.push(Regime::Zero);
        }
        r
    }

    /// Within-regime dynamics matrix, if the regime is present.
    pub fn c(&self, k: Regime) -> Option<&Matrix> {
        match k {
            Regime::Plus => Some(&self.c_plus),
            Regime::Minus => Some(&self.c_minus),
            Regime::Zero => self.zero.as_ref().map(|z| &z.c_zero),
        }
    }

    /// Switch matrix from regime `k` to regime `l`, if both are present.
    pub fn d(&self, k: Regime, l: Regime) -> Option<&Matrix> {
        use Regime::*;
        match (k, l) {
            (Plus, Minus) => Some(&self.d_plus_minus),
            (Minus, Plus) => Some(&self.d_minus_plus),
            (Plus, Zero) => self.zero.as_ref().map(|z| &z.d_plus_zero),
            (Zero, Plus) => self.zero.as_ref().map(|z| &z.d_zero_plus),
            (Minus, Zero) => self.zero.as_ref().map(|z| &z.d_minus_zero),
            (Zero, Minus) => self.zero.as_ref().map(|z| &z.d_zero_minus),
            _ => None,
        }
    }

    pub fn seed_orbits(&self) -> &[SeedOrbit] {
        &self.seed_orbits
    }

    /// Jump intensity at orbit point `a` (full regime-length vector
    /// supported on block `i`): `-a Gamma^k 1`, which only sees block
    /// `(i, i)` of `C^k`.
    pub fn jump_intensity(&self, k: Regime, i: usize, a: &RowVector) -> f64 {
        let c = self.c(k).expect("regime present");
        -block_weight(a, c, self.structure.range(k, i), self.structure.range(k, i))
    }

    /// All jump destinations from `(k, block i, a)` with their intensities
    /// `a M_hat 1`, in a fixed enumeration order (intra-regime blocks
    /// ascending, then plus/minus/zero regimes, blocks ascending).
    pub fn jump_candidates(&self, k: Regime, i: usize, a: &RowVector) -> Vec<JumpCandidate> {
        let mut out = Vec::new();
        let rows = self.structure.range(k, i);
        let c = self.c(k).expect("regime present");
        for j in 0..self.structure.n_blocks(k) {
            if j == i {
                continue;
            }
            let weight = block_weight(a, c, rows.clone(), self.structure.range(k, j));
            out.push(JumpCandidate {
                regime: k,
                block: j,
                weight,
            });
        }
        for l in Regime::ALL {
            if l == k {
                continue;
            }
            let Some(d) = self.d(k, l) else { continue };
            for j in 0..self.structure.n_blocks(l) {
                let weight = block_weight(a, d, rows.clone(), self.structure.range(l, j));
                out.push(JumpCandidate {
                    regime: l,
                    block: j,
                    weight,
                });
            }
        }
        out
    }

    /// Runs every checkable validity condition. Dimensional consistency is
    /// enforced at construction, so here only (b)-(d) can fail; failures
    /// are reported, not raised.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        // (a) re-assert dimensional consistency (cannot fail post-construction).
        checks.push(Check {
            name: "dimensions".into(),
            passed: true,
            residual: None,
            detail: format!(
                "eta_plus={}, eta_minus={}, eta_zero={}",
                self.eta(Regime::Plus),
                self.eta(Regime::Minus),
                self.eta(Regime::Zero)
            ),
        });

        // (b) row sums: C^k 1 + sum_l D^{kl} 1 = 0 per regime.
        for k in self.regimes() {
            let mut sum = self.c(k).unwrap() * ones(self.eta(k));
            for l in Regime::ALL {
                if let Some(d) = self.d(k, l) {
                    sum += d * ones(self.eta(l));
                }
            }
            let residual = sum.iter().map(|x| x.abs()).fold(0.0, f64::max);
            checks.push(Check {
                name: format!("row-sum[{k}]"),
                passed: residual <= tol::ROW_SUM_RESIDUAL,
                residual: Some(residual),
                detail: String::new(),
            });
        }

        // (c) every C^k strictly stable.
        let mut abscissae = Vec::new();
        for k in self.regimes() {
            match spectral_abscissa(self.c(k).unwrap()) {
                Ok(a) => {
                    abscissae.push((k, a));
                    checks.push(Check {
                        name: format!("spectral-abscissa[{k}]"),
                        passed: a < 0.0,
                        residual: Some(a),
                        detail: String::new(),
                    });
                }
                Err(e) => checks.push(Check {
                    name: format!("spectral-abscissa[{k}]"),
                    passed: false,
                    residual: None,
                    detail: e.to_string(),
                }),
            }
        }

        // (d) heuristic intensity check along deterministic flows from the
        // canonical block vertices and any constructor seed points.
        checks.push(self.intensity_check(&abscissae));

        ValidationReport {
            checks,
            assumptions: vec![
                "state-space boundedness and minimality are assumed, not verified".into(),
                "the intensity check samples finitely many seed orbits and grid times; \
                 it cannot certify nonnegativity over the whole reachable set"
                    .into(),
            ],
        }
    }

    fn intensity_check(&self, abscissae: &[(Regime, f64)]) -> Check {
        let mut seeds: Vec<SeedOrbit> = Vec::new();
        for k in self.regimes() {
            for i in 0..self.structure.n_blocks(k) {
                let range = self.structure.range(k, i);
                for coord in range {
                    let mut a = RowVector::zeros(self.eta(k));
                    a[coord] = 1.0;
                    seeds.push(SeedOrbit {
                        regime: k,
                        block: i,
                        a,
                    });
                }
            }
        }
        seeds.extend(self.seed_orbits.iter().cloned());

        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for seed in &seeds {
            let k = seed.regime;
            let Some(&(_, abscissa)) = abscissae.iter().find(|(r, _)| *r == k) else {
                return Check {
                    name: "intensity-flow".into(),
                    passed: false,
                    residual: None,
                    detail: format!("no spectral abscissa available for regime {k}"),
                };
            };
            if abscissa >= 0.0 {
                return Check {
                    name: "intensity-flow".into(),
                    passed: false,
                    residual: None,
                    detail: format!("regime {k} is not stable; flow horizon undefined"),
                };
            }
            let horizon = 20.0 / abscissa.abs();
            const STEPS: usize = 200;
            let range = self.structure.range(k, seed.block);
            let c_block = self
                .c(k)
                .unwrap()
                .view((range.start, range.start), (range.len(), range.len()))
                .into_owned();
            let step = match expm(&c_block, horizon / STEPS as f64) {
                Ok(e) => e,
                Err(e) => {
                    return Check {
                        name: "intensity-flow".into(),
                        passed: false,
                        residual: None,
                        detail: e.to_string(),
                    }
                }
            };
            let mut v = RowVector::from_iterator(range.len(), range.clone().map(|c| seed.a[c]));
            for _ in 0..=STEPS {
                let survival: f64 = v.iter().sum();
                if !(survival > 0.0) {
                    return Check {
                        name: "intensity-flow".into(),
                        passed: false,
                        residual: Some(survival),
                        detail: format!(
                            "survival became nonpositive along the flow in regime {k}"
                        ),
                    };
                }
                let mut a = RowVector::zeros(self.eta(k));
                for (off, coord) in range.clone().enumerate() {
                    a[coord] = v[off] / survival;
                }
                let lambda = self.jump_intensity(k, seed.block, &a);
                let min_candidate = self
                    .jump_candidates(k, seed.block, &a)
                    .iter()
                    .map(|c| c.weight)
                    .fold(f64::INFINITY, f64::min);
                let low = lambda.min(min_candidate);
                if low < worst {
                    worst = low;
                    detail = format!("most negative intensity {worst:.3e} in regime {k}");
                }
                v *= &step;
            }
        }
        Check {
            name: "intensity-flow".into(),
            passed: worst >= -tol::INTENSITY_SLACK,
            residual: Some(worst),
            detail,
        }
    }

    /// Model of a fluid queue driven by a Markov jump process: the blocks
    /// of the generator, grouped by the regime of each state.
    pub fn from_markov_jump(
        qgen: &Matrix,
        regime_of_state: &[Regime],
        blocks: &BlockStructure,
    ) -> Result<Self> {
        if qgen.nrows() != qgen.ncols() || qgen.nrows() != regime_of_state.len() {
            return Err(Error::Dimension {
                what: format!(
                    "generator is {}x{} with {} regime labels",
                    qgen.nrows(),
                    qgen.ncols(),
                    regime_of_state.len()
                ),
            });
        }
        for i in 0..qgen.nrows() {
            if qgen[(i, i)] > 0.0 {
                return Err(Error::NotAGenerator {
                    detail: format!("positive diagonal entry at ({i}, {i})"),
                });
            }
            for j in 0..qgen.ncols() {
                if i != j && qgen[(i, j)] < 0.0 {
                    return Err(Error::NotAGenerator {
                        detail: format!("negative off-diagonal entry at ({i}, {j})"),
                    });
                }
            }
            let row_sum: f64 = qgen.row(i).iter().sum();
            if row_sum.abs() > 1e-12 {
                return Err(Error::NotAGenerator {
                    detail: format!("row {i} sums to {row_sum:.3e}"),
                });
            }
        }

        let states =
            |k: Regime| -> Vec<usize> { (0..regime_of_state.len()).filter(|&s| regime_of_state[s] == k).collect() };
        let sub = |rows: &[usize], cols: &[usize]| -> Matrix {
            Matrix::from_fn(rows.len(), cols.len(), |r, c| qgen[(rows[r], cols[c])])
        };
        let sp = states(Regime::Plus);
        let sm = states(Regime::Minus);
        let sz = states(Regime::Zero);
        for (k, s) in [(Regime::Plus, &sp), (Regime::Minus, &sm), (Regime::Zero, &sz)] {
            if blocks.eta(k) != s.len() {
                return Err(Error::Dimension {
                    what: format!(
                        "block structure gives {} coordinates for regime {k}, \
                         but {} states carry that label",
                        blocks.eta(k),
                        s.len()
                    ),
                });
            }
        }

        let zero = if sz.is_empty() {
            None
        } else {
            Some(ZeroBlocks {
                c_zero: sub(&sz, &sz),
                d_plus_zero: sub(&sp, &sz),
                d_zero_plus: sub(&sz, &sp),
                d_minus_zero: sub(&sm, &sz),
                d_zero_minus: sub(&sz, &sm),
            })
        };
        RapFluidModel::new(
            blocks.clone(),
            sub(&sp, &sp),
            sub(&sm, &sm),
            sub(&sp, &sm),
            sub(&sm, &sp),
            zero,
        )
    }

    /// Alternating matrix-exponential up and down phases: `C^k = S^k`,
    /// `D^{kl} = (-S^k 1) alpha^l` (rank one).
    pub fn from_me_renewal(
        alpha_plus: &RowVector,
        s_plus: &Matrix,
        alpha_minus: &RowVector,
        s_minus: &Matrix,
    ) -> Result<Self> {
        let phase_p = MePhase::new(alpha_plus.clone(), s_plus.clone())?;
        let phase_m = MePhase::new(alpha_minus.clone(), s_minus.clone())?;
        let structure = BlockStructure::new(
            vec![phase_p.dim()],
            vec![phase_m.dim()],
            vec![],
        )?;
        let d_pm = phase_p.exit_rates() * alpha_minus;
        let d_mp = phase_m.exit_rates() * alpha_plus;
        let mut model = RapFluidModel::new(
            structure,
            phase_p.s,
            phase_m.s,
            d_pm,
            d_mp,
            None,
        )?;
        model.seed_orbits = vec![
            SeedOrbit {
                regime: Regime::Plus,
                block: 0,
                a: alpha_plus.clone(),
            },
            SeedOrbit {
                regime: Regime::Minus,
                block: 0,
                a: alpha_minus.clone(),
            },
        ];
        Ok(model)
    }

    /// Markov renewal process with matrix-exponential holding times: block
    /// `i` of regime `k` is an ME phase `(alpha^k_i, S^k_i)`; on phase
    /// completion the chain routes to phase `j` of regime `l` with
    /// probability `P^{kl}_{ij}`. Diagonal blocks of `C^k` are the `S^k_i`,
    /// off-diagonal blocks are `p (-S 1) alpha`, and so are the `D` blocks.
    pub fn from_markov_renewal_me(phases: &RegimePhases, routing: &Routing) -> Result<Self> {
        phases.check()?;
        routing.check(phases)?;

        let structure = BlockStructure::new(
            phases.plus.iter().map(MePhase::dim).collect(),
            phases.minus.iter().map(MePhase::dim).collect(),
            phases.zero.iter().map(MePhase::dim).collect(),
        )?;

        let assemble_c = |k: Regime| -> Matrix {
            let list = phases.list(k);
            let eta = structure.eta(k);
            let mut c = Matrix::zeros(eta, eta);
            for (i, phase) in list.iter().enumerate() {
                let ri = structure.range(k, i);
                c.view_mut((ri.start, ri.start), (phase.dim(), phase.dim()))
                    .copy_from(&phase.s);
                for (j, target) in list.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let p = routing.prob(k, k, i, j);
                    if p != 0.0 {
                        let rj = structure.range(k, j);
                        let block = phase.exit_rates() * &target.alpha * p;
                        c.view_mut((ri.start, rj.start), (phase.dim(), target.dim()))
                            .copy_from(&block);
                    }
                }
            }
            c
        };
        let assemble_d = |k: Regime, l: Regime| -> Matrix {
            let mut d = Matrix::zeros(structure.eta(k), structure.eta(l));
            for (i, phase) in phases.list(k).iter().enumerate() {
                let ri = structure.range(k, i);
                for (j, target) in phases.list(l).iter().enumerate() {
                    let p = routing.prob(k, l, i, j);
                    if p != 0.0 {
                        let rj = structure.range(l, j);
                        let block = phase.exit_rates() * &target.alpha * p;
                        d.view_mut((ri.start, rj.start), (phase.dim(), target.dim()))
                            .copy_from(&block);
                    }
                }
            }
            d
        };

        let zero = if phases.zero.is_empty() {
            None
        } else {
            Some(ZeroBlocks {
                c_zero: assemble_c(Regime::Zero),
                d_plus_zero: assemble_d(Regime::Plus, Regime::Zero),
                d_zero_plus: assemble_d(Regime::Zero, Regime::Plus),
                d_minus_zero: assemble_d(Regime::Minus, Regime::Zero),
                d_zero_minus: assemble_d(Regime::Zero, Regime::Minus),
            })
        };
        let mut model = RapFluidModel::new(
            structure.clone(),
            assemble_c(Regime::Plus),
            assemble_c(Regime::Minus),
            assemble_d(Regime::Plus, Regime::Minus),
            assemble_d(Regime::Minus, Regime::Plus),
            zero,
        )?;
        for k in model.regimes() {
            for (i, phase) in phases.list(k).iter().enumerate() {
                let range = structure.range(k, i);
                let mut a = RowVector::zeros(structure.eta(k));
                for (off, coord) in range.enumerate() {
                    a[coord] = phase.alpha[off];
                }
                model.seed_orbits.push(SeedOrbit {
                    regime: k,
                    block: i,
                    a,
                });
            }
        }
        Ok(model)
    }
}

/// `Sum_{r in rows} a_r * Sum_{c in cols} M_rc`, the intensity seen by
/// orbit `a` through one block of `M`.
fn block_weight(a: &RowVector, m: &Matrix, rows: Range<usize>, cols: Range<usize>) -> f64 {
    rows.map(|r| a[r] * cols.clone().map(|c| m[(r, c)]).sum::<f64>())
        .sum()
}

/// One matrix-exponential phase: normalized start vector and stable dynamics.
#[derive(Debug, Clone)]
pub struct MePhase {
    pub alpha: RowVector,
    pub s: Matrix,
}

impl MePhase {
    pub fn new(alpha: RowVector, s: Matrix) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() != alpha.len() {
            return Err(Error::Dimension {
                what: format!(
                    "phase has alpha of length {} and S of {}x{}",
                    alpha.len(),
                    s.nrows(),
                    s.ncols()
                ),
            });
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { sum });
        }
        let abscissa = spectral_abscissa(&s)?;
        if abscissa >= 0.0 {
            return Err(Error::UnstableBlock {
                detail: format!("phase matrix has spectral abscissa {abscissa:.3e}"),
            });
        }
        Ok(MePhase { alpha, s })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Exit-rate column `-S 1`.
    pub fn exit_rates(&self) -> ColVector {
        -(&self.s * ones(self.dim()))
    }
}

/// Phase lists per regime for the Markov-renewal constructor.
#[derive(Debug, Clone, Default)]
pub struct RegimePhases {
    pub plus: Vec<MePhase>,
    pub minus: Vec<MePhase>,
    pub zero: Vec<MePhase>,
}

impl RegimePhases {
    pub fn list(&self, k: Regime) -> &[MePhase] {
        match k {
            Regime::Plus => &self.plus,
            Regime::Minus => &self.minus,
            Regime::Zero => &self.zero,
        }
    }

    fn check(&self) -> Result<()> {
        if self.plus.is_empty() || self.minus.is_empty() {
            return Err(Error::Dimension {
                what: "need at least one phase in each of the plus and minus regimes".into(),
            });
        }
        Ok(())
    }
}

/// Routing probabilities between phases, one matrix per ordered regime
/// pair; a missing matrix means no routing between that pair.
#[derive(Debug, Clone, Default)]
pub struct Routing {
    pub matrices: std::collections::BTreeMap<(Regime, Regime), Matrix>,
}

impl Routing {
    pub fn prob(&self, k: Regime, l: Regime, i: usize, j: usize) -> f64 {
        self.matrices.get(&(k, l)).map_or(0.0, |m| m[(i, j)])
    }

    /// Dimensions must match the phase counts and each source phase must
    /// route with total probability 1.
    fn check(&self, phases: &RegimePhases) -> Result<()> {
        for ((k, l), m) in &self.matrices {
            let (nk, nl) = (phases.list(*k).len(), phases.list(*l).len());
            if m.nrows() != nk || m.ncols() != nl {
                return Err(Error::Dimension {
                    what: format!(
                        "routing block ({k}, {l}) is {}x{}, expected {nk}x{nl}",
                        m.nrows(),
                        m.ncols()
                    ),
                });
            }
            if m.iter().any(|&p| p < 0.0) {
                return Err(Error::NotStochastic {
                    detail: format!("negative routing probability in block ({k}, {l})"),
                });
            }
        }
        for k in Regime::ALL {
            for i in 0..phases.list(k).len() {
                let total: f64 = Regime::ALL
                    .iter()
                    .map(|&l| {
                        (0..phases.list(l).len())
                            .map(|j| self.prob(k, l, i, j))
                            .sum::<f64>()
                    })
                    .sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::NotStochastic {
                        detail: format!("routing from ({k}, phase {i}) sums to {total}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One validity check with its outcome.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: Option<f64>,
    pub detail: String,
}

/// Outcome of [`RapFluidModel::validate`]; `assumptions` lists conditions
/// that cannot be verified from the matrices alone.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub assumptions: Vec<String>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Zero-regime data retained through censoring: `(-C0)^{-1}` and the raw
/// switch matrices into the zero regime, which the stationary density and
/// the zero-boundary vector still need.
#[derive(Debug, Clone)]
pub struct ZeroPart {
    /// `(-C0)^{-1}`.
    pub neg_c0_inv: Matrix,
    pub d_plus_zero: Matrix,
    pub d_minus_zero: Matrix,
}

/// Two-regime system equivalent to the original on the half line: the
/// zero-slope regime is censored out through `(-C0)^{-1}`. For a model
/// without zero blocks this is the identity view of its own matrices.
#[derive(Debug, Clone)]
pub struct CensoredModel {
    pub c_plus: Matrix,
    pub c_minus: Matrix,
    pub d_plus_minus: Matrix,
    pub d_minus_plus: Matrix,
    pub zero: Option<ZeroPart>,
    /// True when a zero regime was actually censored out.
    pub censored: bool,
}

impl CensoredModel {
    pub fn eta_plus(&self) -> usize {
        self.c_plus.nrows()
    }

    pub fn eta_minus(&self) -> usize {
        self.c_minus.nrows()
    }
}

/// Censors the zero regime: `C^{k*} = C^k + D^{k0} (-C0)^{-1} D^{0k}`,
/// `D^{kl*} = D^{kl} + D^{k0} (-C0)^{-1} D^{0l}`. Without zero blocks the
/// model's own matrices are returned unchanged.
pub fn censor_zero(model: &RapFluidModel) -> Result<CensoredModel> {
    let Some(z) = &model.zero else {
        return Ok(CensoredModel {
            c_plus: model.c_plus.clone(),
            c_minus: model.c_minus.clone(),
            d_plus_minus: model.d_plus_minus.clone(),
            d_minus_plus: model.d_minus_plus.clone(),
            zero: None,
            censored: false,
        });
    };
    let neg_c0_inv = (-&z.c_zero)
        .try_inverse()
        .ok_or(Error::SingularCZero)?;
    // Guard against a numerically near-singular C0 slipping through.
    let id_residual = norm_inf(&((-&z.c_zero) * &neg_c0_inv - Matrix::identity(z.c_zero.nrows(), z.c_zero.nrows())));
    if id_residual > 1e-8 {
        return Err(Error::SingularCZero);
    }
    let through = |from: &Matrix, to: &Matrix| from * &neg_c0_inv * to;
    Ok(CensoredModel {
        c_plus: &model.c_plus + through(&z.d_plus_zero, &z.d_zero_plus),
        c_minus: &model.c_minus + through(&z.d_minus_zero, &z.d_zero_minus),
        d_plus_minus: &model.d_plus_minus + through(&z.d_plus_zero, &z.d_zero_minus),
        d_minus_plus: &model.d_minus_plus + through(&z.d_minus_zero, &z.d_zero_plus),
        zero: Some(ZeroPart {
            neg_c0_inv,
            d_plus_zero: z.d_plus_zero.clone(),
            d_minus_zero: z.d_minus_zero.clone(),
        }),
        censored: true,
    })
}
