//! Distance-based dynamic-programming trajectory planner.
//!
//! The route from the start position to the route end is discretized into
//! `n` steps of `ds` meters. Planner states live on a `(step k, velocity
//! cell, time cell)` grid with velocity snapped to `v_step` and time snapped
//! to `t_step` (round to nearest); the control is the acceleration applied
//! over one distance step.
//!
//! The sweep is a forward cost-to-come label search over that grid. Every
//! cell keeps at most one label, and a label carries the *exact* continuous
//! velocity and time of the path that created it; the cell indices only bin
//! states for pruning. Transition semantics (the brute-force test oracle
//! mirrors these exactly):
//!
//! 1. Transitions start from the label's exact values: `v_next = sqrt(v^2 +
//!    2 a ds)`, `dt = 2 ds / (v_next + v)`; infeasible when the radicand is
//!    negative or no motion occurs.
//! 2. An edge is admissible iff `v_next <= v_max[k+1] + 1e-9`,
//!    `t + dt <= t_max + 1e-9` and `t + dt >= t_min[k+1] - 1e-9`.
//! 3. Edge cost: `stage_cost(v, a, dt)` plus the red-arrival penalty of every
//!    signal located at step `k+1`, evaluated at the exact arrival time.
//! 4. The successor label lands in cell `(min(snap(v_next), vmax_idx[k+1]),
//!    min(snap(t + dt), t_max_idx))` and keeps the exact `(v_next, t + dt)`.
//! 5. A label replaces a cell's incumbent only when strictly cheaper. Source
//!    cells are scanned in (velocity cell, time cell) order and actions in
//!    (|a|, a) order, so cost ties resolve to the smallest acceleration
//!    magnitude, then the smaller acceleration, then the earlier time cell.
//! 6. The answer is the cheapest terminal label, ties broken by earlier time
//!    cell, then lower velocity cell.
//!
//! Because admissibility, penalties and costs are all evaluated on exact
//! values along the committed path, the returned trajectory realizes exactly
//! the cost and signal phases the optimizer saw; grid resolution only limits
//! how many alternatives survive, never the integrity of the answer.

use crate::error::{Error, Result};
use crate::route::{on_grid, Route};
use crate::signal::TrafficSignal;
use crate::trajectory::{Trajectory, TrajectoryRecord};
use crate::vehicle::VehicleParams;

const EPS_V: f64 = 1e-9;
const EPS_T: f64 = 1e-9;

/// Frontier snapshots are kept every this many stages so the action sequence
/// can be backtracked without holding parent links for the whole table.
const CHECKPOINT_INTERVAL: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerWeights {
    /// Energy weight (alpha).
    pub alpha: f64,
    /// Mobility weight (beta).
    pub beta: f64,
    /// Comfort weight (gamma).
    pub gamma: f64,
    /// Cost added when a step arrives at a signal during red.
    pub p_red: f64,
}

impl PlannerWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::Validation(
                "objective weights must be non-negative".into(),
            ));
        }
        if self.alpha == 0.0 && self.beta == 0.0 && self.gamma == 0.0 {
            return Err(Error::Validation(
                "at least one objective weight must be positive".into(),
            ));
        }
        if !(self.p_red > 0.0) {
            return Err(Error::Validation("red penalty must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub ds_m: f64,
    pub v_step_mps: f64,
    pub t_step_s: f64,
    /// Finite acceleration menu, each value within the vehicle's limits.
    pub a_candidates: Vec<f64>,
    /// Route-level lower bound on arrival times (rarely binding; the
    /// free-flow bound per step is applied on top of it).
    pub t_min_s: f64,
    /// Route-level upper bound on arrival times.
    pub t_max_s: f64,
}

impl GridSpec {
    /// Default acceleration menu clipped to one vehicle's limits.
    pub fn default_a_candidates(accel_min: f64, accel_max: f64) -> Vec<f64> {
        let mut set: Vec<f64> = [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, accel_max]
            .into_iter()
            .filter(|a| *a >= accel_min && *a <= accel_max)
            .collect();
        set.sort_by(f64::total_cmp);
        set.dedup();
        set
    }

    pub fn validate(&self, vehicle: &VehicleParams) -> Result<()> {
        if !(self.ds_m > 0.0 && self.v_step_mps > 0.0 && self.t_step_s > 0.0) {
            return Err(Error::Validation(
                "grid steps (ds, v_step, t_step) must be positive".into(),
            ));
        }
        if !(self.t_min_s < self.t_max_s) {
            return Err(Error::Validation("t_min must be below t_max".into()));
        }
        if self.a_candidates.is_empty() {
            return Err(Error::Validation("acceleration menu is empty".into()));
        }
        if self.a_candidates.len() >= (u8::MAX as usize) {
            return Err(Error::Validation("acceleration menu too large".into()));
        }
        for &a in &self.a_candidates {
            if a < vehicle.accel_min_mps2 - 1e-9 || a > vehicle.accel_max_mps2 + 1e-9 {
                return Err(Error::Validation(format!(
                    "acceleration candidate {a} outside vehicle limits [{}, {}]",
                    vehicle.accel_min_mps2, vehicle.accel_max_mps2
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartState {
    pub position_m: f64,
    pub time_s: f64,
    pub velocity_mps: f64,
}

/// Optional per-step bound profiles, indexed by step `0..=n`.
#[derive(Debug, Clone, Default)]
pub struct PlanProfiles {
    /// Per-step velocity cap; combined with the route speed limit by minimum.
    pub v_max: Option<Vec<f64>>,
    /// Per-step earliest arrival time; combined with the free-flow bound by
    /// maximum. Used to keep a replanned leader behind its predecessor.
    pub t_min: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub trajectory: Trajectory,
    /// Optimal cost: the dwell cost plus the sum of stage costs and penalties
    /// along the returned trajectory, exactly as accumulated by the sweep.
    pub cost: f64,
    /// Acceleration applied over each distance step.
    pub actions: Vec<f64>,
    /// Time spent standing at the start position before departing. Non-zero
    /// only when arrival-time floors cannot be met by driving slowly.
    pub dwell_s: f64,
    /// True when the optimal trajectory crosses some signal during red.
    pub red_unavoidable: bool,
}

/// Cost rate charged while dwelling at a standstill start, per second: the
/// mobility cost of the slowest drivable step, prorated by its duration, so
/// standing still is never cheaper than creeping. `None` when the menu has no
/// positive acceleration (a standstill start cannot move at all then).
pub fn dwell_cost_per_second(grid: &GridSpec, weights: &PlannerWeights, v_des: f64) -> Option<f64> {
    let a_launch = grid
        .a_candidates
        .iter()
        .copied()
        .filter(|a| *a > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !a_launch.is_finite() {
        return None;
    }
    let v_crawl = (2.0 * a_launch * grid.ds_m).sqrt();
    let slowest_step_s = 2.0 * grid.ds_m / v_crawl;
    Some(weights.beta * mobility_cost(0.0, grid.ds_m, v_des) / slowest_step_s)
}

/// Mobility cost of one step: squared deviation of the step travel time from
/// the desired-speed travel time, with a small regularizer against v = 0.
pub fn mobility_cost(v: f64, ds: f64, v_des: f64) -> f64 {
    debug_assert!(v >= 0.0 && v_des > 0.0);
    let d = ds / (v + 0.01) - ds / v_des;
    d * d
}

/// Comfort cost of one step: squared acceleration.
pub fn comfort_cost(a: f64) -> f64 {
    a * a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    Next { v_next: f64, dt_s: f64 },
    Infeasible,
}

/// Constant-acceleration-over-distance transition for one step.
pub fn kinematic_transition(v: f64, a: f64, ds: f64) -> Transition {
    debug_assert!(v >= 0.0 && ds > 0.0);
    let radicand = v * v + 2.0 * a * ds;
    if radicand < 0.0 {
        return Transition::Infeasible;
    }
    let v_next = radicand.sqrt();
    let denom = v_next + v;
    if denom <= 0.0 {
        return Transition::Infeasible;
    }
    Transition::Next {
        v_next,
        dt_s: 2.0 * ds / denom,
    }
}

/// Weighted energy + mobility + comfort cost of one step entered at speed `v`
/// with acceleration `a` held over `ds` meters (`dt` seconds).
pub fn stage_cost(
    vehicle: &VehicleParams,
    weights: &PlannerWeights,
    v: f64,
    a: f64,
    dt: f64,
    v_des: f64,
    ds: f64,
) -> f64 {
    let energy = vehicle
        .step_energy(v, a, dt)
        .expect("stage cost requires v >= 0 and dt > 0");
    weights.alpha * energy.energy_wh
        + weights.beta * mobility_cost(v, ds, v_des)
        + weights.gamma * comfort_cost(a)
}

/// Red-arrival penalty at a step located `position_m` from the route origin:
/// `p_red` per signal standing at that position whose phase at `t_arrival` is
/// red, zero everywhere else.
pub fn red_penalty(
    signals: &[TrafficSignal],
    position_m: f64,
    t_arrival: f64,
    p_red: f64,
) -> Result<f64> {
    if t_arrival < 0.0 {
        return Err(Error::Domain(format!(
            "red penalty query at negative time {t_arrival}"
        )));
    }
    let mut penalty = 0.0;
    for sig in signals {
        if (sig.position_m - position_m).abs() <= 1e-6
            && sig.phase_unchecked(t_arrival) == crate::signal::Phase::Red
        {
            penalty += p_red;
        }
    }
    Ok(penalty)
}

/// Round-to-nearest grid cell index; the shared binning rule of the planner
/// and the test oracle.
pub fn snap_index(x: f64, step: f64) -> usize {
    (x * (1.0 / step)).round() as usize
}

struct Problem<'a> {
    vehicle: &'a VehicleParams,
    signals: &'a [TrafficSignal],
    weights: &'a PlannerWeights,
    grid: &'a GridSpec,
    start: StartState,
    v_des: f64,
    n: usize,
    /// Action values sorted by (|a|, a); the scan order that implements the
    /// tie-break.
    actions_sorted: Vec<f64>,
    v_max: Vec<f64>,
    t_min: Vec<f64>,
    vmax_idx: Vec<usize>,
    t_max_idx: usize,
    t_levels: usize,
    v_levels: usize,
    /// Signal indices located at each step.
    step_signals: Vec<Vec<usize>>,
}

impl<'a> Problem<'a> {
    fn cells(&self) -> usize {
        self.v_levels * self.t_levels
    }

    fn position(&self, k: usize) -> f64 {
        self.start.position_m + k as f64 * self.grid.ds_m
    }

    /// Number of signals at step `k` showing red at `t_arrival`.
    fn red_hits(&self, k: usize, t_arrival: f64) -> u32 {
        let mut hits = 0;
        for &si in &self.step_signals[k] {
            if self.signals[si].phase_unchecked(t_arrival) == crate::signal::Phase::Red {
                hits += 1;
            }
        }
        hits
    }
}

/// One label per grid cell: cost-to-come plus the exact state of its path.
#[derive(Clone)]
struct Frontier {
    cost: Vec<f64>,
    v: Vec<f64>,
    t: Vec<f64>,
    red_hits: Vec<u32>,
}

impl Frontier {
    fn new(cells: usize) -> Self {
        Frontier {
            cost: vec![f64::INFINITY; cells],
            v: vec![0.0; cells],
            t: vec![0.0; cells],
            red_hits: vec![0; cells],
        }
    }

    fn clear(&mut self) {
        self.cost.fill(f64::INFINITY);
    }
}

/// Transition data for one exact velocity under every action; cached because
/// label velocities repeat heavily across time cells and stages.
#[derive(Clone)]
struct EdgeTemplate {
    feasible: bool,
    v_next: f64,
    dt: f64,
    cost_base: f64,
}

struct TemplateCache {
    /// Keyed by velocity cell, then exact velocity bits.
    slots: Vec<Vec<(u64, Vec<EdgeTemplate>)>>,
}

impl TemplateCache {
    fn new(v_levels: usize) -> Self {
        TemplateCache {
            slots: vec![Vec::new(); v_levels],
        }
    }

    fn templates(&mut self, problem: &Problem, vi: usize, v: f64) -> &[EdgeTemplate] {
        let slot = &mut self.slots[vi];
        let bits = v.to_bits();
        if let Some(pos) = slot.iter().position(|(b, _)| *b == bits) {
            return &slot[pos].1;
        }
        let templates = problem
            .actions_sorted
            .iter()
            .map(|&a| match kinematic_transition(v, a, problem.grid.ds_m) {
                Transition::Infeasible => EdgeTemplate {
                    feasible: false,
                    v_next: 0.0,
                    dt: 0.0,
                    cost_base: f64::INFINITY,
                },
                Transition::Next { v_next, dt_s } => EdgeTemplate {
                    feasible: true,
                    v_next,
                    dt: dt_s,
                    cost_base: stage_cost(
                        problem.vehicle,
                        problem.weights,
                        v,
                        a,
                        dt_s,
                        problem.v_des,
                        problem.grid.ds_m,
                    ),
                },
            })
            .collect();
        slot.push((bits, templates));
        &slot.last().expect("just pushed").1
    }
}

pub fn plan_trajectory(
    vehicle: &VehicleParams,
    route: &Route,
    signals: &[TrafficSignal],
    weights: &PlannerWeights,
    grid: &GridSpec,
    start: StartState,
    v_des: f64,
    profiles: Option<&PlanProfiles>,
) -> Result<Plan> {
    vehicle.validate()?;
    route.validate()?;
    weights.validate()?;
    grid.validate(vehicle)?;
    if !(v_des > 0.0) {
        return Err(Error::Validation("desired velocity must be positive".into()));
    }

    let span = route.length_m - start.position_m;
    if !(span > 0.0) || !on_grid(span, grid.ds_m) {
        return Err(Error::Validation(format!(
            "start position {} m does not leave a positive multiple of ds to the route end",
            start.position_m
        )));
    }
    let n = (span / grid.ds_m).round() as usize;

    if start.time_s < 0.0 || start.time_s > grid.t_max_s {
        return Err(Error::Validation(format!(
            "start time {} s outside [0, t_max]",
            start.time_s
        )));
    }

    // Per-step bounds.
    let mut v_max = vec![route.speed_limit_mps; n + 1];
    if let Some(profile) = profiles.and_then(|p| p.v_max.as_ref()) {
        if profile.len() != n + 1 {
            return Err(Error::Validation(format!(
                "v_max profile has {} entries, expected {}",
                profile.len(),
                n + 1
            )));
        }
        for (slot, &cap) in v_max.iter_mut().zip(profile) {
            if !(cap > 0.0) {
                return Err(Error::Validation(
                    "v_max profile entries must be positive".into(),
                ));
            }
            *slot = slot.min(cap);
        }
    }
    let mut t_min = vec![grid.t_min_s.max(0.0); n + 1];
    for (k, slot) in t_min.iter_mut().enumerate() {
        let free_flow = start.time_s + k as f64 * grid.ds_m / route.speed_limit_mps;
        *slot = slot.max(free_flow);
    }
    if let Some(profile) = profiles.and_then(|p| p.t_min.as_ref()) {
        if profile.len() != n + 1 {
            return Err(Error::Validation(format!(
                "t_min profile has {} entries, expected {}",
                profile.len(),
                n + 1
            )));
        }
        // the start state itself is never floor-constrained
        for (slot, &floor) in t_min.iter_mut().zip(profile).skip(1) {
            *slot = slot.max(floor);
        }
    }

    if start.velocity_mps < 0.0 || start.velocity_mps > v_max[0] + EPS_V {
        return Err(Error::Validation(format!(
            "start velocity {} m/s outside [0, v_max]",
            start.velocity_mps
        )));
    }

    // Signals mapped onto steps.
    let mut step_signals = vec![Vec::new(); n + 1];
    for (si, sig) in signals.iter().enumerate() {
        sig.validate()?;
        if sig.position_m >= route.length_m {
            return Err(Error::Config(format!(
                "signal at {} m is not inside the route (length {} m)",
                sig.position_m, route.length_m
            )));
        }
        let rel = sig.position_m - start.position_m;
        if rel <= 0.0 {
            continue; // signal behind the start never gates this plan
        }
        if !on_grid(rel, grid.ds_m) {
            return Err(Error::Config(format!(
                "signal at {} m is not aligned to the {} m distance grid",
                sig.position_m, grid.ds_m
            )));
        }
        let k = (rel / grid.ds_m).round() as usize;
        step_signals[k].push(si);
    }

    let vmax_idx: Vec<usize> = v_max
        .iter()
        .map(|&cap| ((cap + EPS_V) / grid.v_step_mps).floor() as usize)
        .collect();
    let t_max_idx = ((grid.t_max_s + EPS_T) / grid.t_step_s).floor() as usize;

    let mut actions_sorted = grid.a_candidates.clone();
    actions_sorted.sort_by(|x, y| x.abs().total_cmp(&y.abs()).then_with(|| x.total_cmp(y)));
    actions_sorted.dedup();

    let v_levels = vmax_idx.iter().copied().max().unwrap() + 1;
    let problem = Problem {
        vehicle,
        signals,
        weights,
        grid,
        start,
        v_des,
        n,
        actions_sorted,
        v_max,
        t_min,
        vmax_idx,
        t_max_idx,
        t_levels: t_max_idx + 1,
        v_levels,
        step_signals,
    };

    solve(&problem)
}

/// Advance `frontier` from `stage` to `stage + 1`. When `parents` is given it
/// receives, per destination cell, the source cell index and the index of the
/// applied action (in sorted action order).
fn advance_stage(
    problem: &Problem,
    cache: &mut TemplateCache,
    stage: usize,
    frontier: &Frontier,
    next: &mut Frontier,
    mut parents: Option<(&mut [u32], &mut [u8])>,
) {
    next.clear();
    let t_levels = problem.t_levels;
    let t_step = problem.grid.t_step_s;
    let vmax_next = problem.v_max[stage + 1];
    let vmax_next_idx = problem.vmax_idx[stage + 1];
    let t_min_next = problem.t_min[stage + 1];
    let t_max = problem.grid.t_max_s;
    let has_signal = !problem.step_signals[stage + 1].is_empty();
    let p_red = problem.weights.p_red;

    for vi in 0..=problem.vmax_idx[stage] {
        let row = vi * t_levels;
        for ti in 0..t_levels {
            let cell = row + ti;
            let cost = frontier.cost[cell];
            if !cost.is_finite() {
                continue;
            }
            let v = frontier.v[cell];
            let t = frontier.t[cell];
            let red_so_far = frontier.red_hits[cell];
            let templates = cache.templates(problem, vi, v);
            for (a_idx, edge) in templates.iter().enumerate() {
                if !edge.feasible || edge.v_next > vmax_next + EPS_V {
                    continue;
                }
                let t_next = t + edge.dt;
                if t_next > t_max + EPS_T || t_next < t_min_next - EPS_T {
                    continue;
                }
                let mut edge_cost = edge.cost_base;
                let mut hits = 0;
                if has_signal {
                    hits = problem.red_hits(stage + 1, t_next);
                    edge_cost += f64::from(hits) * p_red;
                }
                let total = cost + edge_cost;
                let vi_next = snap_index(edge.v_next, problem.grid.v_step_mps).min(vmax_next_idx);
                let ti_next = snap_index(t_next, t_step).min(problem.t_max_idx);
                let dest = vi_next * t_levels + ti_next;
                if total < next.cost[dest] {
                    next.cost[dest] = total;
                    next.v[dest] = edge.v_next;
                    next.t[dest] = t_next;
                    next.red_hits[dest] = red_so_far + hits;
                    if let Some((ref mut pcell, ref mut pact)) = parents {
                        pcell[dest] = cell as u32;
                        pact[dest] = a_idx as u8;
                    }
                }
            }
        }
    }
}

/// Seed the stage-0 frontier. A standstill start may dwell in place before
/// departing: one label per time quantum, charged at the dwell rate, so the
/// sweep can satisfy steep arrival-time floors that no drivable speed meets.
fn start_frontier(problem: &Problem) -> Frontier {
    let mut frontier = Frontier::new(problem.cells());
    let vi0 =
        snap_index(problem.start.velocity_mps, problem.grid.v_step_mps).min(problem.vmax_idx[0]);
    let ti0 = snap_index(problem.start.time_s, problem.grid.t_step_s).min(problem.t_max_idx);
    let cell = vi0 * problem.t_levels + ti0;
    frontier.cost[cell] = 0.0;
    frontier.v[cell] = problem.start.velocity_mps;
    frontier.t[cell] = problem.start.time_s;
    frontier.red_hits[cell] = 0;

    if problem.start.velocity_mps == 0.0 {
        if let Some(rate) =
            dwell_cost_per_second(problem.grid, problem.weights, problem.v_des)
        {
            let free_flow = problem.n as f64 * problem.grid.ds_m / problem.v_max[0];
            let latest = problem.grid.t_max_s - free_flow;
            let mut j = 1usize;
            loop {
                let dwell = j as f64 * problem.grid.t_step_s;
                let t = problem.start.time_s + dwell;
                let ti = snap_index(t, problem.grid.t_step_s);
                if t > latest || ti > problem.t_max_idx {
                    break;
                }
                let cell = vi0 * problem.t_levels + ti;
                let cost = dwell * rate;
                if cost < frontier.cost[cell] {
                    frontier.cost[cell] = cost;
                    frontier.v[cell] = 0.0;
                    frontier.t[cell] = t;
                    frontier.red_hits[cell] = 0;
                }
                j += 1;
            }
        }
    }
    frontier
}

/// Cheapest terminal cell; ties go to the earlier time cell, then the lower
/// velocity cell.
fn best_terminal_cell(problem: &Problem, terminal: &Frontier) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for ti in 0..problem.t_levels {
        for vi in 0..=problem.vmax_idx[problem.n] {
            let cell = vi * problem.t_levels + ti;
            let cost = terminal.cost[cell];
            if !cost.is_finite() {
                continue;
            }
            if best.map_or(true, |(c, _)| cost < c) {
                best = Some((cost, cell));
            }
        }
    }
    best.map(|(_, cell)| cell)
}

fn solve(problem: &Problem) -> Result<Plan> {
    let cells = problem.cells();
    let mut cache = TemplateCache::new(problem.v_levels);
    let mut frontier = start_frontier(problem);
    let mut next = Frontier::new(cells);

    // Forward sweep, snapshotting the frontier at fixed intervals.
    let mut checkpoints: Vec<(usize, Frontier)> = vec![(0, frontier.clone())];
    for stage in 0..problem.n {
        advance_stage(problem, &mut cache, stage, &frontier, &mut next, None);
        std::mem::swap(&mut frontier, &mut next);
        let reached = stage + 1;
        if reached % CHECKPOINT_INTERVAL == 0 && reached < problem.n {
            checkpoints.push((reached, frontier.clone()));
        }
    }

    let terminal_cell = match best_terminal_cell(problem, &frontier) {
        Some(cell) => cell,
        None => {
            let free_flow = problem.n as f64 * problem.grid.ds_m / problem.v_max[0];
            let diag = if problem.start.time_s + free_flow > problem.grid.t_max_s {
                format!(
                    "free-flow travel needs {:.1} s but t_max is {:.1} s",
                    problem.start.time_s + free_flow,
                    problem.grid.t_max_s
                )
            } else {
                "the acceleration menu and state grid leave no admissible path".to_string()
            };
            return Err(Error::Planning(format!(
                "no feasible terminal state from start (v={} m/s, t={} s): {diag}",
                problem.start.velocity_mps, problem.start.time_s
            )));
        }
    };
    let total_cost = frontier.cost[terminal_cell];
    let total_red_hits = frontier.red_hits[terminal_cell];

    // Backtrack segment by segment: replay each checkpointed window with
    // parent recording and walk it backwards.
    let mut action_indices = vec![0u8; problem.n];
    let mut cursor_cell = terminal_cell;
    let mut cursor_stage = problem.n;
    for &(cp_stage, ref cp_frontier) in checkpoints.iter().rev() {
        if cp_stage >= cursor_stage {
            continue;
        }
        let window = cursor_stage - cp_stage;
        let mut pcells = vec![vec![u32::MAX; cells]; window];
        let mut pacts = vec![vec![u8::MAX; cells]; window];
        let mut replay = cp_frontier.clone();
        let mut scratch = Frontier::new(cells);
        for (offset, stage) in (cp_stage..cursor_stage).enumerate() {
            advance_stage(
                problem,
                &mut cache,
                stage,
                &replay,
                &mut scratch,
                Some((&mut pcells[offset], &mut pacts[offset])),
            );
            std::mem::swap(&mut replay, &mut scratch);
        }
        for offset in (0..window).rev() {
            let stage = cp_stage + offset;
            let parent = pcells[offset][cursor_cell];
            let action = pacts[offset][cursor_cell];
            debug_assert!(parent != u32::MAX, "broken parent chain at stage {stage}");
            action_indices[stage] = action;
            cursor_cell = parent as usize;
        }
        cursor_stage = cp_stage;
    }
    debug_assert_eq!(cursor_stage, 0);

    // The backtracked stage-0 cell identifies how long the plan dwells at the
    // start before departing.
    let start_label_t = checkpoints[0].1.t[cursor_cell];
    let start_label_cost = checkpoints[0].1.cost[cursor_cell];
    let dwell_s = start_label_t - problem.start.time_s;

    // Reconstruct the exact path by replaying the action sequence from the
    // (possibly dwelled) start state; this reproduces the sweep's arithmetic
    // bit for bit.
    let mut records = Vec::with_capacity(problem.n + 1);
    let mut actions = Vec::with_capacity(problem.n);
    let mut v = problem.start.velocity_mps;
    let mut t = start_label_t;
    let mut replay_cost = start_label_cost;
    for k in 0..problem.n {
        let a = problem.actions_sorted[action_indices[k] as usize];
        let (v_next, dt) = match kinematic_transition(v, a, problem.grid.ds_m) {
            Transition::Next { v_next, dt_s } => (v_next, dt_s),
            Transition::Infeasible => {
                return Err(Error::Planning(format!(
                    "backtracked path is kinematically inconsistent at step {k}"
                )))
            }
        };
        let t_next = t + dt;
        let energy = problem.vehicle.step_energy(v, a, dt)?;
        replay_cost += stage_cost(
            problem.vehicle,
            problem.weights,
            v,
            a,
            dt,
            problem.v_des,
            problem.grid.ds_m,
        ) + red_penalty(
            problem.signals,
            problem.position(k + 1),
            t_next,
            problem.weights.p_red,
        )?;
        records.push(TrajectoryRecord {
            step: k,
            position_m: problem.position(k),
            time_s: t,
            velocity_mps: v,
            accel_mps2: a,
            energy_wh: energy.energy_wh,
            eta_tr: Some(energy.eta_tr),
            traction: energy.traction,
        });
        actions.push(a);
        v = v_next;
        t = t_next;
    }
    records.push(TrajectoryRecord {
        step: problem.n,
        position_m: problem.position(problem.n),
        time_s: t,
        velocity_mps: v,
        accel_mps2: 0.0,
        energy_wh: 0.0,
        eta_tr: None,
        traction: false,
    });
    debug_assert!(
        (replay_cost - total_cost).abs() <= 1e-9 * total_cost.abs().max(1.0),
        "replayed cost {replay_cost} diverges from sweep cost {total_cost}"
    );

    Ok(Plan {
        trajectory: Trajectory::new(records),
        cost: total_cost,
        actions,
        dwell_s,
        red_unavoidable: total_red_hits > 0,
    })
}
