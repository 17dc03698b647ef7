//! Event-driven simulator for the orbit/level process, exact in law: the
//! orbit flows deterministically between jumps, holding times come from
//! inverting the survival function, and jump destinations are drawn
//! proportionally to the block intensities. Monte Carlo estimators built
//! on top serve as independent oracles for the analytic quantities.

use crate::linalg::{expm, spectral_abscissa, RowVector};
use crate::model::{RapFluidModel, Regime};
use crate::{tol, Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::ops::Range;

/// Orbit point: regime, active block, and the full regime-length vector
/// supported on that block. `a . 1 = 1` always; coordinates outside the
/// block stay zero (the flow is block-diagonal, jumps land inside one
/// block).
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitState {
    pub regime: Regime,
    pub block: usize,
    pub a: RowVector,
}

impl OrbitState {
    pub fn new(model: &RapFluidModel, regime: Regime, block: usize, a: RowVector) -> Result<Self> {
        let eta = model.eta(regime);
        if eta == 0 {
            return Err(Error::InvalidArgument {
                what: format!("model has no {regime} regime"),
            });
        }
        if block >= model.structure().n_blocks(regime) {
            return Err(Error::InvalidArgument {
                what: format!("regime {regime} has no block {block}"),
            });
        }
        if a.ncols() != eta {
            return Err(Error::Dimension {
                what: format!("orbit vector has {} entries, regime {regime} has {eta}", a.ncols()),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "orbit vector".into(),
            });
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > tol::ORBIT_NORMALIZATION {
            return Err(Error::NotNormalized { sum });
        }
        let range = model.structure().range(regime, block);
        for (i, v) in a.iter().enumerate() {
            if !range.contains(&i) && v.abs() > tol::BLOCK_CONFINEMENT {
                return Err(Error::InvalidArgument {
                    what: format!("orbit entry {i} lies outside block {block} but is {v:.3e}"),
                });
            }
        }
        Ok(OrbitState { regime, block, a })
    }

    /// Builds a state from a full regime-length vector, inferring the block
    /// from the support. The support must sit inside a single block.
    pub fn from_full(model: &RapFluidModel, regime: Regime, a: RowVector) -> Result<Self> {
        let n_blocks = model.structure().n_blocks(regime);
        let mut block = None;
        for j in 0..n_blocks {
            let range = model.structure().range(regime, j);
            if a
                .iter()
                .enumerate()
                .any(|(i, v)| range.contains(&i) && v.abs() > tol::BLOCK_CONFINEMENT)
            {
                if block.is_some() {
                    return Err(Error::InvalidArgument {
                        what: "orbit vector is supported on more than one block".into(),
                    });
                }
                block = Some(j);
            }
        }
        let block = block.ok_or(Error::InvalidArgument {
            what: "orbit vector has empty support".into(),
        })?;
        OrbitState::new(model, regime, block, a)
    }

    /// Coordinate range of the active block.
    fn range(&self, model: &RapFluidModel) -> Range<usize> {
        model.structure().range(self.regime, self.block)
    }
}

/// Independent per-path stream: one master seed, the path index as the
/// stream number. Draws are identical no matter how paths are scheduled
/// across workers.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Deterministic flow between jumps: `a e^{C_b dt}` on the active block,
/// renormalized to sum one.
pub fn flow_step(state: &OrbitState, dt: f64, model: &RapFluidModel) -> Result<OrbitState> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("flow time must be finite and >= 0, got {dt}"),
        });
    }
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let range = state.range(model);
    let c = model.c(state.regime).expect("regime present");
    let block = c.view((range.start, range.start), (range.len(), range.len()));
    let flowed = sub_vector(&state.a, range.clone()) * expm(&block.into_owned(), dt)?;
    let denom: f64 = flowed.iter().sum();
    if !denom.is_finite() || denom <= 0.0 {
        return Err(Error::OrbitDegenerate {
            detail: format!("survival mass {denom:.3e} after flowing {dt:.3e}"),
        });
    }
    let mut a = RowVector::zeros(state.a.ncols());
    for (offset, i) in range.enumerate() {
        a[i] = flowed[offset] / denom;
    }
    Ok(OrbitState {
        regime: state.regime,
        block: state.block,
        a,
    })
}

/// Probability of no jump within `h`: `a e^{C_b h} 1` on the active block.
pub fn survival(state: &OrbitState, h: f64, model: &RapFluidModel) -> Result<f64> {
    let range = state.range(model);
    let c = model.c(state.regime).expect("regime present");
    if range.len() == 1 {
        return Ok((c[(range.start, range.start)] * h).exp());
    }
    let block = c.view((range.start, range.start), (range.len(), range.len()));
    let flowed = sub_vector(&state.a, range) * expm(&block.into_owned(), h)?;
    Ok(flowed.iter().sum())
}

/// Solves `S(h) = u` for the next jump time: doubling to bracket, then
/// bisection on the monotone survival. One-dimensional blocks invert in
/// closed form. `u = 1` maps to `h = 0`.
pub fn invert_survival(state: &OrbitState, u: f64, model: &RapFluidModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || u == 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("survival level must lie in (0, 1], got {u}"),
        });
    }
    if u >= 1.0 {
        return Ok(0.0);
    }
    let range = state.range(model);
    let c = model.c(state.regime).expect("regime present");
    if range.len() == 1 {
        let rate = c[(range.start, range.start)];
        if rate >= 0.0 {
            return Err(Error::HoldingTimeOverflow {
                cap: tol::HOLDING_TIME_CAP,
            });
        }
        return Ok(u.ln() / rate);
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut s_prev = 1.0;
    loop {
        let s = survival(state, hi, model)?;
        if s > s_prev + tol::INTENSITY_SLACK {
            return Err(Error::InvalidIntensity {
                detail: format!("survival rose from {s_prev:.6e} to {s:.6e} at h = {hi:.3e}"),
            });
        }
        if s <= u {
            break;
        }
        lo = hi;
        s_prev = s;
        hi *= 2.0;
        if hi > tol::HOLDING_TIME_CAP {
            return Err(Error::HoldingTimeOverflow {
                cap: tol::HOLDING_TIME_CAP,
            });
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol::SURVIVAL_INVERSION * lo.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if survival(state, mid, model)? > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws the next holding time by survival inversion; the uniform draw is
/// shifted into `(0, 1]` so `S(h) = u` always has a solution at `h >= 0`.
pub fn sample_holding_time(
    state: &OrbitState,
    rng: &mut impl Rng,
    model: &RapFluidModel,
) -> Result<f64> {
    let u = 1.0 - rng.gen::<f64>();
    invert_survival(state, u, model)
}

/// Draws the jump destination proportionally to the block intensities and
/// lands at the deterministic point `a M / (a M 1)`.
pub fn sample_jump(
    state: &OrbitState,
    rng: &mut impl Rng,
    model: &RapFluidModel,
) -> Result<OrbitState> {
    let intensity = model.jump_intensity(state.regime, state.block, &state.a);
    if !(intensity > 0.0) {
        return Err(Error::OrbitDegenerate {
            detail: format!("jump intensity {intensity:.3e} is not positive"),
        });
    }
    let candidates = model.jump_candidates(state.regime, state.block, &state.a);
    let mut total = 0.0;
    for cand in &candidates {
        if cand.weight < -tol::INTENSITY_SLACK {
            return Err(Error::InvalidIntensity {
                detail: format!(
                    "candidate ({}, {}) has weight {:.3e}",
                    cand.regime, cand.block, cand.weight
                ),
            });
        }
        total += cand.weight.max(0.0);
    }
    if !(total > 0.0) {
        return Err(Error::OrbitDegenerate {
            detail: format!("total jump weight {total:.3e} is not positive"),
        });
    }

    let mut draw = rng.gen::<f64>() * total;
    let mut chosen = candidates.len() - 1;
    for (idx, cand) in candidates.iter().enumerate() {
        let w = cand.weight.max(0.0);
        if draw < w {
            chosen = idx;
            break;
        }
        draw -= w;
    }
    let cand = &candidates[chosen];

    let rows = state.range(model);
    let cols = model.structure().range(cand.regime, cand.block);
    let m = if cand.regime == state.regime {
        model.c(state.regime).expect("regime present")
    } else {
        model
            .d(state.regime, cand.regime)
            .expect("candidate implies the block exists")
    };
    let mut a = RowVector::zeros(model.eta(cand.regime));
    let mut mass = 0.0;
    for col in cols.clone() {
        let mut entry = 0.0;
        for row in rows.clone() {
            entry += state.a[row] * m[(row, col)];
        }
        a[col] = entry;
        mass += entry;
    }
    if !(mass > 0.0) {
        return Err(Error::OrbitDegenerate {
            detail: format!("landing mass {mass:.3e} is not positive"),
        });
    }
    for col in cols {
        a[col] /= mass;
    }
    Ok(OrbitState {
        regime: cand.regime,
        block: cand.block,
        a,
    })
}

fn sub_vector(a: &RowVector, range: Range<usize>) -> RowVector {
    RowVector::from_fn(range.len(), |_, j| a[range.start + j])
}

/// One recorded point of a path: time, level, orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEvent {
    pub time: f64,
    pub level: f64,
    pub state: OrbitState,
}

/// Jump epochs plus requested grid points, in time order, bracketed by the
/// initial and final states. `regulated` selects the queue (floored at
/// zero) over the free level.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub events: Vec<PathEvent>,
    pub regulated: bool,
    pub jumps: u64,
    pub final_time: f64,
}

/// Simulates one path to `horizon`, event-driven; the grid adds recording
/// points without affecting the dynamics. Deterministic given the seed.
pub fn simulate_path(
    model: &RapFluidModel,
    start: &OrbitState,
    horizon: f64,
    regulated: bool,
    seed: u64,
    grid: &[f64],
) -> Result<PathRecord> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("horizon must be finite and > 0, got {horizon}"),
        });
    }
    let mut grid: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|g| g.is_finite() && *g > 0.0 && *g < horizon)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut next_grid = 0;

    let mut rng = path_rng(seed, 0);
    let mut t = 0.0;
    let mut level = 0.0;
    let mut state = start.clone();
    let mut jumps = 0u64;
    let mut events = vec![PathEvent {
        time: 0.0,
        level,
        state: state.clone(),
    }];

    // Level after `dt` in the current regime, with optional flooring.
    let advance_level = |level: f64, slope: f64, dt: f64| -> f64 {
        let next = level + slope * dt;
        if regulated {
            next.max(0.0)
        } else {
            next
        }
    };

    loop {
        let h = sample_holding_time(&state, &mut rng, model)?;
        let slope = state.regime.slope();
        let segment_end = (t + h).min(horizon);

        while next_grid < grid.len() && grid[next_grid] <= segment_end {
            let g = grid[next_grid];
            events.push(PathEvent {
                time: g,
                level: advance_level(level, slope, g - t),
                state: flow_step(&state, g - t, model)?,
            });
            next_grid += 1;
        }

        if t + h >= horizon {
            let state_at_end = flow_step(&state, horizon - t, model)?;
            events.push(PathEvent {
                time: horizon,
                level: advance_level(level, slope, horizon - t),
                state: state_at_end,
            });
            break;
        }

        level = advance_level(level, slope, h);
        t += h;
        let flowed = flow_step(&state, h, model)?;
        state = sample_jump(&flowed, &mut rng, model)?;
        jumps += 1;
        events.push(PathEvent {
            time: t,
            level,
            state: state.clone(),
        });
    }

    Ok(PathRecord {
        events,
        regulated,
        jumps,
        final_time: horizon,
    })
}

/// Horizon heuristic for passage estimators: long relative to the within-
/// regime mixing times.
pub fn default_horizon(model: &RapFluidModel) -> Result<f64> {
    let ap = spectral_abscissa(model.c(Regime::Plus).ok_or(Error::InvalidArgument {
        what: "model has no plus regime".into(),
    })?)?;
    let am = spectral_abscissa(model.c(Regime::Minus).ok_or(Error::InvalidArgument {
        what: "model has no minus regime".into(),
    })?)?;
    Ok(200.0 / (ap + am).abs().max(f64::MIN_POSITIVE))
}

/// Plain scalar Monte Carlo summary. `stderr` is the sample standard
/// deviation over the per-sample values (or batch means) divided by the
/// square root of their count.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

fn scalar_estimate(values: &[f64], seed: u64) -> SimEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    SimEstimate {
        mean,
        stderr,
        n_samples: values.len() as u64,
        seed,
    }
}

/// Outcome of one descent probe.
struct Descent {
    hit: bool,
    truncated: bool,
    /// Orbit at the hitting epoch, zero vector when the probe missed, so
    /// the path average estimates the defective landing vector.
    orbit: RowVector,
}

/// Runs one path from level zero in the up regime until the free level
/// first reaches `-depth`, or the horizon passes.
fn descent_probe(
    model: &RapFluidModel,
    start: &OrbitState,
    depth: f64,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<Descent> {
    let eta_minus = model.eta(Regime::Minus);
    let mut t = 0.0;
    let mut level = 0.0;
    let mut state = start.clone();
    loop {
        let h = sample_holding_time(&state, rng, model)?;
        if state.regime == Regime::Minus && level - h <= -depth {
            let dt = level + depth;
            if t + dt > horizon {
                return Ok(Descent {
                    hit: false,
                    truncated: true,
                    orbit: RowVector::zeros(eta_minus),
                });
            }
            let at_hit = flow_step(&state, dt, model)?;
            return Ok(Descent {
                hit: true,
                truncated: false,
                orbit: at_hit.a,
            });
        }
        if t + h >= horizon {
            return Ok(Descent {
                hit: false,
                truncated: true,
                orbit: RowVector::zeros(eta_minus),
            });
        }
        level += state.regime.slope() * h;
        t += h;
        let flowed = flow_step(&state, h, model)?;
        state = sample_jump(&flowed, rng, model)?;
    }
}

/// First-return and level-hitting estimates from independent paths.
#[derive(Debug, Clone)]
pub struct PassageEstimate {
    pub probability: SimEstimate,
    /// Defective mean orbit at the hitting epoch, comparable entrywise to
    /// the analytic landing vector.
    pub orbit_mean: RowVector,
    pub orbit_stderr: RowVector,
    /// Paths cut off by the horizon before resolving; downward bias.
    pub truncated: u64,
    pub horizon: f64,
}

/// Fraction of paths whose free level returns to the start from above
/// before the horizon; `depth = 0` is the first return, `depth = x` the
/// hitting of `start - x`.
pub fn estimate_level_hitting(
    model: &RapFluidModel,
    start: &OrbitState,
    depth: f64,
    n_paths: u64,
    horizon: f64,
    seed: u64,
) -> Result<PassageEstimate> {
    if start.regime != Regime::Plus {
        return Err(Error::InvalidArgument {
            what: "passage estimators start in the up regime".into(),
        });
    }
    if !depth.is_finite() || depth < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("depth must be finite and >= 0, got {depth}"),
        });
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument {
            what: "need at least one path".into(),
        });
    }
    let eta_minus = model.eta(Regime::Minus);
    if horizon <= 0.0 {
        // Nothing can resolve; report zero and flag every path truncated.
        return Ok(PassageEstimate {
            probability: SimEstimate {
                mean: 0.0,
                stderr: 0.0,
                n_samples: n_paths,
                seed,
            },
            orbit_mean: RowVector::zeros(eta_minus),
            orbit_stderr: RowVector::zeros(eta_minus),
            truncated: n_paths,
            horizon,
        });
    }

    let outcomes: Vec<Descent> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            descent_probe(model, start, depth, horizon, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    // Sequential reduction in path order: identical bytes for any worker
    // count.
    let hits: Vec<f64> = outcomes.iter().map(|o| if o.hit { 1.0 } else { 0.0 }).collect();
    let probability = scalar_estimate(&hits, seed);
    let truncated = outcomes.iter().filter(|o| o.truncated).count() as u64;

    let n = n_paths as f64;
    let mut orbit_mean = RowVector::zeros(eta_minus);
    for o in &outcomes {
        orbit_mean += &o.orbit;
    }
    orbit_mean /= n;
    let mut orbit_var = RowVector::zeros(eta_minus);
    for o in &outcomes {
        for j in 0..eta_minus {
            let d = o.orbit[j] - orbit_mean[j];
            orbit_var[j] += d * d;
        }
    }
    let orbit_stderr = if n_paths < 2 {
        RowVector::zeros(eta_minus)
    } else {
        RowVector::from_fn(eta_minus, |_, j| (orbit_var[j] / (n - 1.0) / n).sqrt())
    };

    Ok(PassageEstimate {
        probability,
        orbit_mean,
        orbit_stderr,
        truncated,
        horizon,
    })
}

/// First return to the start level from above: depth-zero hitting.
pub fn estimate_first_return(
    model: &RapFluidModel,
    start: &OrbitState,
    n_paths: u64,
    horizon: f64,
    seed: u64,
) -> Result<PassageEstimate> {
    estimate_level_hitting(model, start, 0.0, n_paths, horizon, seed)
}

/// Occupation-time estimate of the stationary law from one long regulated
/// path, batched for error bars.
#[derive(Debug, Clone)]
pub struct StationaryEstimate {
    /// Time fraction at level zero in the down regime.
    pub atom_minus: SimEstimate,
    /// Time fraction at level zero in the zero regime, when one exists.
    pub atom_zero: Option<SimEstimate>,
    /// Time fractions in `[edge_{i-1}, edge_i)` at positive level, the
    /// first bin starting at zero.
    pub bins: Vec<SimEstimate>,
    /// Time fraction above the last edge.
    pub tail: SimEstimate,
    pub edges: Vec<f64>,
    pub n_batches: usize,
    pub events: u64,
}

#[derive(Clone)]
struct Occupancy {
    atom_minus: f64,
    atom_zero: f64,
    bins: Vec<f64>,
    tail: f64,
}

impl Occupancy {
    fn new(n_bins: usize) -> Self {
        Occupancy {
            atom_minus: 0.0,
            atom_zero: 0.0,
            bins: vec![0.0; n_bins],
            tail: 0.0,
        }
    }

    /// Time at a constant positive level.
    fn constant(&mut self, edges: &[f64], level: f64, duration: f64) {
        for (i, e) in edges.iter().enumerate() {
            if level < *e {
                self.bins[i] += duration;
                return;
            }
        }
        self.tail += duration;
    }

    /// Unit-slope traversal of `[lo, hi]`: time in each bin equals overlap
    /// length.
    fn ramp(&mut self, edges: &[f64], lo: f64, hi: f64) {
        let mut prev = 0.0;
        for (i, e) in edges.iter().enumerate() {
            let overlap = (hi.min(*e) - lo.max(prev)).max(0.0);
            self.bins[i] += overlap;
            prev = *e;
        }
        self.tail += (hi - lo.max(prev)).max(0.0);
    }

    /// Level occupation of a `duration`-long piece of a holding interval
    /// that began at `l0`, covering segment offsets `[tau_a, tau_b]`.
    fn deposit(&mut self, edges: &[f64], regime: Regime, l0: f64, tau_a: f64, tau_b: f64) {
        debug_assert!(tau_b >= tau_a);
        match regime {
            Regime::Plus => self.ramp(edges, l0 + tau_a, l0 + tau_b),
            Regime::Zero => {
                if l0 == 0.0 {
                    self.atom_zero += tau_b - tau_a;
                } else {
                    self.constant(edges, l0, tau_b - tau_a);
                }
            }
            Regime::Minus => {
                let ramp_end = tau_b.min(l0);
                if ramp_end > tau_a {
                    self.ramp(edges, l0 - ramp_end, l0 - tau_a);
                }
                let floor_start = tau_a.max(l0);
                if tau_b > floor_start {
                    self.atom_minus += tau_b - floor_start;
                }
            }
        }
    }
}

/// Simulates one regulated path of length `burn_in + total_time` and
/// converts post-burn-in occupation times into batch-mean estimates:
/// boundary atoms by regime plus a histogram over `[0, e1), [e1, e2), ...`
/// and the tail above the last edge.
pub fn estimate_stationary(
    model: &RapFluidModel,
    start: &OrbitState,
    total_time: f64,
    burn_in: f64,
    edges: &[f64],
    seed: u64,
) -> Result<StationaryEstimate> {
    if !total_time.is_finite() || total_time <= 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("total_time must be finite and > 0, got {total_time}"),
        });
    }
    if !burn_in.is_finite() || burn_in < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("burn_in must be finite and >= 0, got {burn_in}"),
        });
    }
    if edges.is_empty() {
        return Err(Error::InvalidArgument {
            what: "need at least one histogram edge".into(),
        });
    }
    for pair in edges.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument {
                what: "histogram edges must be strictly increasing".into(),
            });
        }
    }
    if !edges[0].is_finite() || edges[0] <= 0.0 {
        return Err(Error::InvalidArgument {
            what: "histogram edges must be positive and finite".into(),
        });
    }

    const N_BATCHES: usize = 20;
    let batch_len = total_time / N_BATCHES as f64;
    let mut batches: Vec<Occupancy> = vec![Occupancy::new(edges.len()); N_BATCHES];

    let mut rng = path_rng(seed, 0);
    let mut t = 0.0;
    let mut level = 0.0;
    let mut state = start.clone();
    let mut events = 0u64;
    let t_end = burn_in + total_time;

    while t < t_end {
        let h = sample_holding_time(&state, &mut rng, model)?;
        let seg_end = (t + h).min(t_end);
        let regime = state.regime;

        // Split the deposit at the burn-in boundary and batch boundaries;
        // offsets are measured from the segment start at `t`, level `level`.
        let mut cursor = t.max(burn_in);
        while cursor < seg_end {
            let batch_idx = (((cursor - burn_in) / batch_len) as usize).min(N_BATCHES - 1);
            let batch_end = burn_in + batch_len * (batch_idx + 1) as f64;
            let piece_end = seg_end.min(batch_end);
            batches[batch_idx].deposit(edges, regime, level, cursor - t, piece_end - t);
            cursor = piece_end;
        }

        // Advance the regulated level to the end of the holding interval.
        level = match regime {
            Regime::Plus => level + h,
            Regime::Zero => level,
            Regime::Minus => {
                if h >= level {
                    0.0
                } else {
                    level - h
                }
            }
        };
        if t + h >= t_end {
            break;
        }
        t += h;
        let flowed = flow_step(&state, h, model)?;
        state = sample_jump(&flowed, &mut rng, model)?;
        events += 1;
    }

    let fractions = |pick: &dyn Fn(&Occupancy) -> f64| -> Vec<f64> {
        batches.iter().map(|b| pick(b) / batch_len).collect()
    };
    let atom_minus = scalar_estimate(&fractions(&|b| b.atom_minus), seed);
    let atom_zero = if model.has_zero() {
        Some(scalar_estimate(&fractions(&|b| b.atom_zero), seed))
    } else {
        None
    };
    let bins = (0..edges.len())
        .map(|i| scalar_estimate(&fractions(&|b| b.bins[i]), seed))
        .collect();
    let tail = scalar_estimate(&fractions(&|b| b.tail), seed);

    Ok(StationaryEstimate {
        atom_minus,
        atom_zero,
        bins,
        tail,
        edges: edges.to_vec(),
        n_batches: N_BATCHES,
        events,
    })
}
