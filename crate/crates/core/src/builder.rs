//! Deterministic-equivalent MILP: first-stage day-ahead bids shared by all
//! scenarios, second-stage dispatch per scenario.
//!
//! Variables are laid out in fixed blocks (first stage, then one block per
//! scenario in role-major order) so a [`VarLayout`] maps structured keys to
//! column indices without a name lookup. Device constraints stay in physical
//! units; only the objective is unified by `p_base` and the boiler capacity.

use campus_milp::{Constraint, MilpModel, MilpSolution, MilpStatus, ModelStatistics, Sense, VarId, VarKind, Variable};
use serde::{Deserialize, Serialize};

use crate::campus::{validate, CampusModel, ComfortBand};
use crate::error::{CoreError, Result};
use crate::par::Exec;
use crate::scenario::{Scenario, ScenarioSet};
use crate::schedule::{Dispatch, Schedule};
use crate::units::{KBTU_PER_KWH, KJ_PER_KBTU, KJ_PER_KWH};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComfortWeights {
    pub hvac: f64,
    pub pev: f64,
    pub ewh: f64,
}

impl Default for ComfortWeights {
    fn default() -> Self {
        ComfortWeights { hvac: 1.0, pev: 1.0, ewh: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// When off the comfort variables and rows stay in the model with zero weight.
    pub include_comfort: bool,
    /// Comfort variables exist for business slots only.
    pub comfort_hours_only: bool,
    pub enforce_bands_business_hours_only: bool,
    pub comfort_weights: ComfortWeights,
    pub exec: Exec,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            include_comfort: true,
            comfort_hours_only: true,
            enforce_bands_business_hours_only: true,
            comfort_weights: ComfortWeights::default(),
            exec: Exec::default(),
        }
    }
}

impl BuildOptions {
    pub fn without_comfort() -> Self {
        BuildOptions { include_comfort: false, ..Default::default() }
    }

    fn weights(&self) -> ComfortWeights {
        if self.include_comfort {
            self.comfort_weights
        } else {
            ComfortWeights { hvac: 0.0, pev: 0.0, ewh: 0.0 }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    RtBuy,
    RtSell,
    Psi1,
    Psi2,
    HvacP,
    HvacX,
    PevP,
    PevE,
    EwhL,
    EwhC,
    BoilerH,
    EsCh,
    EsDis,
    EsE,
    EsU,
    JHvac,
    JPev,
    JEwh,
}

const ROLES: usize = 18;

/// Column index of every decision variable.
#[derive(Clone, Debug, PartialEq)]
pub struct VarLayout {
    pub slots: usize,
    pub scenarios: usize,
    pub buildings: usize,
    pub pevs: usize,
    pub ewhs: usize,
    pub boilers: usize,
    pub storages: usize,
    /// Slots that carry comfort variables, ascending.
    pub comfort_slots: Vec<usize>,
    comfort_pos: Vec<Option<usize>>,
    offsets: [usize; ROLES],
    block: usize,
}

impl VarLayout {
    pub fn new(model: &CampusModel, scenarios: usize, comfort_hours_only: bool) -> Self {
        let slots = model.time.slots_per_day;
        let comfort_slots: Vec<usize> =
            (0..slots).filter(|&t| !comfort_hours_only || model.time.is_business(t)).collect();
        let mut comfort_pos = vec![None; slots];
        for (c, &t) in comfort_slots.iter().enumerate() {
            comfort_pos[t] = Some(c);
        }
        let (nb, nk, nj, nh, nn) = (
            model.buildings.len(),
            model.pevs.len(),
            model.n_ewh(),
            model.n_boiler(),
            model.n_es(),
        );
        let nc = comfort_slots.len();
        let sizes = [
            slots,
            slots,
            slots,
            slots,
            nb * slots,
            nb * slots * 3,
            nk * slots,
            nk * slots,
            nj * slots,
            nj * slots,
            nh * slots,
            nn * slots,
            nn * slots,
            nn * slots,
            nn * slots,
            nb * nc,
            nk * nc,
            nj * nc,
        ];
        let mut offsets = [0; ROLES];
        let mut acc = 0;
        for (o, s) in offsets.iter_mut().zip(sizes) {
            *o = acc;
            acc += s;
        }
        VarLayout {
            slots,
            scenarios,
            buildings: nb,
            pevs: nk,
            ewhs: nj,
            boilers: nh,
            storages: nn,
            comfort_slots,
            comfort_pos,
            offsets,
            block: acc,
        }
    }

    pub fn first_stage_len(&self) -> usize {
        2 * self.slots
    }

    /// Variables per scenario block.
    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn num_vars(&self) -> usize {
        self.first_stage_len() + self.scenarios * self.block
    }

    pub fn da_buy(&self, t: usize) -> VarId {
        VarId(t)
    }

    pub fn da_sell(&self, t: usize) -> VarId {
        VarId(self.slots + t)
    }

    fn base(&self, s: usize) -> usize {
        self.first_stage_len() + s * self.block
    }

    fn at(&self, s: usize, role: Role, dev: usize, t: usize) -> VarId {
        VarId(self.base(s) + self.offsets[role as usize] + dev * self.slots + t)
    }

    fn comfort_at(&self, s: usize, role: Role, dev: usize, t: usize) -> Option<VarId> {
        let c = self.comfort_pos[t]?;
        Some(VarId(self.base(s) + self.offsets[role as usize] + dev * self.comfort_slots.len() + c))
    }

    pub fn rt_buy(&self, s: usize, t: usize) -> VarId {
        self.at(s, Role::RtBuy, 0, t)
    }
    pub fn rt_sell(&self, s: usize, t: usize) -> VarId {
        self.at(s, Role::RtSell, 0, t)
    }
    pub fn psi1(&self, s: usize, t: usize) -> VarId {
        self.at(s, Role::Psi1, 0, t)
    }
    pub fn psi2(&self, s: usize, t: usize) -> VarId {
        self.at(s, Role::Psi2, 0, t)
    }
    pub fn hvac_power(&self, s: usize, i: usize, t: usize) -> VarId {
        self.at(s, Role::HvacP, i, t)
    }
    /// Thermal state component `k` (0 indoor, 1 inner wall, 2 outer wall) at the end of slot `t`.
    pub fn hvac_state(&self, s: usize, i: usize, t: usize, k: usize) -> VarId {
        VarId(self.base(s) + self.offsets[Role::HvacX as usize] + (i * self.slots + t) * 3 + k)
    }
    pub fn pev_power(&self, s: usize, k: usize, t: usize) -> VarId {
        self.at(s, Role::PevP, k, t)
    }
    pub fn pev_energy(&self, s: usize, k: usize, t: usize) -> VarId {
        self.at(s, Role::PevE, k, t)
    }
    pub fn ewh_power(&self, s: usize, j: usize, t: usize) -> VarId {
        self.at(s, Role::EwhL, j, t)
    }
    pub fn ewh_temp(&self, s: usize, j: usize, t: usize) -> VarId {
        self.at(s, Role::EwhC, j, t)
    }
    pub fn boiler_heat(&self, s: usize, b: usize, t: usize) -> VarId {
        self.at(s, Role::BoilerH, b, t)
    }
    pub fn es_charge(&self, s: usize, n: usize, t: usize) -> VarId {
        self.at(s, Role::EsCh, n, t)
    }
    pub fn es_discharge(&self, s: usize, n: usize, t: usize) -> VarId {
        self.at(s, Role::EsDis, n, t)
    }
    pub fn es_energy(&self, s: usize, n: usize, t: usize) -> VarId {
        self.at(s, Role::EsE, n, t)
    }
    pub fn es_mode(&self, s: usize, n: usize, t: usize) -> VarId {
        self.at(s, Role::EsU, n, t)
    }
    pub fn comfort_hvac(&self, s: usize, i: usize, t: usize) -> Option<VarId> {
        self.comfort_at(s, Role::JHvac, i, t)
    }
    pub fn comfort_pev(&self, s: usize, k: usize, t: usize) -> Option<VarId> {
        self.comfort_at(s, Role::JPev, k, t)
    }
    pub fn comfort_ewh(&self, s: usize, j: usize, t: usize) -> Option<VarId> {
        self.comfort_at(s, Role::JEwh, j, t)
    }

    /// All comfort columns of scenario `s`.
    pub fn comfort_vars(&self, s: usize) -> std::ops::Range<usize> {
        let start = self.base(s) + self.offsets[Role::JHvac as usize];
        start..self.base(s) + self.block
    }
}

/// Device class and parameters of one comfort envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComfortKind {
    Hvac(ComfortBand),
    Pev { e_base: f64, e_desired: f64 },
    Ewh(ComfortBand),
}

/// Concave envelope of a comfort curve: `J <= upper` as a column bound plus ramp rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Epigraph {
    pub upper: f64,
    pub rows: Vec<Constraint>,
}

/// Rows bounding `j` by the ramps of `kind` evaluated at `x`. `j` has no lower bound.
pub fn encode_comfort_epigraph(kind: ComfortKind, j: VarId, x: VarId, tag: &str) -> Result<Epigraph> {
    let mut rows = Vec::with_capacity(2);
    match kind {
        ComfortKind::Hvac(b) => {
            let w = b.delta - b.epsilon;
            if w <= 0.0 {
                return Err(CoreError::Invalid(format!("degenerate comfort band at {tag}: delta = epsilon")));
            }
            // J <= (C_max - C) / w  and  J <= (C - C_min) / w
            rows.push(Constraint::new(format!("jhi_{tag}"), vec![(j, 1.0), (x, 1.0 / w)], Sense::Le, b.c_max() / w));
            rows.push(Constraint::new(format!("jlo_{tag}"), vec![(j, 1.0), (x, -1.0 / w)], Sense::Le, -b.c_min() / w));
        }
        ComfortKind::Pev { e_base, e_desired } => {
            let w = e_desired - e_base;
            if w <= 0.0 {
                return Err(CoreError::Invalid(format!("degenerate PEV comfort range at {tag}")));
            }
            rows.push(Constraint::new(format!("jlo_{tag}"), vec![(j, 1.0), (x, -1.0 / w)], Sense::Le, -e_base / w));
        }
        ComfortKind::Ewh(b) => {
            let w = b.desired - b.c_min();
            if w <= 0.0 {
                return Err(CoreError::Invalid(format!("degenerate comfort band at {tag}")));
            }
            rows.push(Constraint::new(format!("jlo_{tag}"), vec![(j, 1.0), (x, -1.0 / w)], Sense::Le, -b.c_min() / w));
        }
    }
    Ok(Epigraph { upper: 1.0, rows })
}

/// `psi1 >= |da_buy - rt_buy|` and `psi2 >= |da_sell - rt_sell|` as four rows.
/// The psi columns carry the `>= 0` bound.
pub fn linearize_penalty(
    da: (VarId, VarId),
    rt: (VarId, VarId),
    psi: (VarId, VarId),
    tag: &str,
) -> Vec<Constraint> {
    let mut rows = Vec::with_capacity(4);
    for (k, (d, r, p)) in [(da.0, rt.0, psi.0), (da.1, rt.1, psi.1)].into_iter().enumerate() {
        let n = k + 1;
        rows.push(Constraint::new(format!("psi{n}a_{tag}"), vec![(p, 1.0), (d, -1.0), (r, 1.0)], Sense::Ge, 0.0));
        rows.push(Constraint::new(format!("psi{n}b_{tag}"), vec![(p, 1.0), (d, 1.0), (r, -1.0)], Sense::Ge, 0.0));
    }
    rows
}

/// A built MILP with the layout needed to read solutions back.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub milp: MilpModel,
    pub layout: VarLayout,
    pub options: BuildOptions,
    pub probabilities: Vec<f64>,
    pub p_base: f64,
}

/// Objective split into the unified operating cost and the weighted comfort.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParts {
    pub unified_cost: f64,
    pub comfort: f64,
}

impl BuiltModel {
    pub fn statistics(&self) -> ModelStatistics {
        self.milp.statistics()
    }

    pub fn objective_parts(&self, values: &[f64]) -> Result<ObjectiveParts> {
        if values.len() != self.milp.num_vars() {
            return Err(CoreError::Dimension(format!(
                "solution has {} values, model has {} columns",
                values.len(),
                self.milp.num_vars()
            )));
        }
        let c = self.milp.objective();
        let mut comfort = 0.0;
        for s in 0..self.layout.scenarios {
            comfort += self.layout.comfort_vars(s).map(|v| c[v] * values[v]).sum::<f64>();
        }
        let total = self.milp.evaluate_objective(values);
        Ok(ObjectiveParts { unified_cost: comfort - total, comfort })
    }
}

struct Block {
    vars: Vec<(Variable, f64)>,
    rows: Vec<Constraint>,
}

struct Ctx<'a> {
    model: &'a CampusModel,
    layout: &'a VarLayout,
    opts: &'a BuildOptions,
    weights: ComfortWeights,
}

fn var(name: String, lower: f64, upper: f64, kind: VarKind) -> Variable {
    Variable { name, lower, upper, kind }
}

fn check_scenarios(model: &CampusModel, set: &ScenarioSet) -> Result<()> {
    if set.is_empty() {
        return Err(CoreError::NoScenarios);
    }
    let n = model.time.slots_per_day;
    let dt = model.time.slot_hours;
    let ewhs = model.ewhs();
    for (s, sc) in set.iter().enumerate() {
        sc.check(n)?;
        if sc.n_pev() != model.pevs.len() || sc.n_ewh() != ewhs.len() {
            return Err(CoreError::Dimension(format!(
                "scenario {s} has {} PEVs and {} EWHs, campus has {} and {}",
                sc.n_pev(),
                sc.n_ewh(),
                model.pevs.len(),
                ewhs.len()
            )));
        }
        for (j, (_, e)) in ewhs.iter().enumerate() {
            let width = (e.window.1 + 1 - e.window.0) as f64 * dt * KJ_PER_KWH;
            let (lo, hi) = (e.l_min * width, e.l_max * width);
            let l = sc.ewh_budget[j];
            let tol = 1e-9 * hi.max(1.0);
            if l < lo - tol || l > hi + tol {
                return Err(CoreError::Invalid(format!(
                    "scenario {s}: EWH {j} budget {l} kJ outside the window capacity [{lo}, {hi}]"
                )));
            }
        }
    }
    Ok(())
}

/// Assembles the deterministic equivalent of `model` over `scenarios`.
pub fn build(model: &CampusModel, scenarios: &ScenarioSet, opts: &BuildOptions) -> Result<BuiltModel> {
    let report = validate(model);
    if !report.is_empty() {
        return Err(CoreError::Invalid(report.to_string()));
    }
    let w = opts.comfort_weights;
    if [w.hvac, w.pev, w.ewh].iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(CoreError::Invalid("comfort weights must be finite and >= 0".into()));
    }
    check_scenarios(model, scenarios)?;

    let started = std::time::Instant::now();
    let layout = VarLayout::new(model, scenarios.len(), opts.comfort_hours_only);
    let ctx = Ctx { model, layout: &layout, opts, weights: opts.weights() };
    let probabilities: Vec<f64> = (0..scenarios.len()).map(|s| scenarios.probability(s)).collect();

    let blocks: Vec<Result<Block>> = opts.exec.map_range(scenarios.len(), |s| {
        let sc = scenarios.get(s);
        scenario_block(&ctx, s, probabilities[s], &sc)
    });

    let mut milp = MilpModel::new("campus");
    let n = model.time.slots_per_day;
    let g = model.grid.g_max;
    for t in 0..n {
        milp.add_continuous(format!("gda_buy_t{t}"), 0.0, g)?;
    }
    for t in 0..n {
        milp.add_continuous(format!("gda_sell_t{t}"), 0.0, g)?;
    }
    // First-stage objective terms depend on scenario prices.
    let dt = model.time.slot_hours;
    let pb = model.p_base;
    for (s, sc) in scenarios.iter().enumerate() {
        let rho = probabilities[s];
        for t in 0..n {
            milp.add_objective_coeff(layout.da_buy(t), rho * (sc.rt[t] - sc.da_buy[t]) * dt / pb);
            milp.add_objective_coeff(layout.da_sell(t), rho * (sc.da_sell[t] - sc.rt[t]) * dt / pb);
        }
    }
    for block in blocks {
        let block = block?;
        for (v, c) in block.vars {
            let id = milp.add_var(v.name, v.lower, v.upper, v.kind)?;
            milp.set_objective_coeff(id, c);
        }
        for r in block.rows {
            milp.add_constraint(r)?;
        }
    }
    debug_assert_eq!(milp.num_vars(), layout.num_vars());

    let st = milp.statistics();
    log::info!(
        "built MILP in {:.2?}: {} continuous, {} binary, {} equality rows, {} inequality rows, {} nonzeros",
        started.elapsed(),
        st.continuous_vars,
        st.binary_vars,
        st.equality_rows,
        st.inequality_rows,
        st.nonzeros
    );
    Ok(BuiltModel { milp, layout, options: *opts, probabilities, p_base: pb })
}

fn scenario_block(ctx: &Ctx, s: usize, rho: f64, sc: &Scenario) -> Result<Block> {
    let m = ctx.model;
    let l = ctx.layout;
    let n = m.time.slots_per_day;
    let dt = m.time.slot_hours;
    let pb = m.p_base;
    let g = m.grid.g_max;
    let band_slot = |t: usize| !ctx.opts.enforce_bands_business_hours_only || m.time.is_business(t);
    let inf = f64::INFINITY;
    let mut vars: Vec<(Variable, f64)> = Vec::with_capacity(l.block_len());
    let mut rows: Vec<Constraint> = Vec::new();
    let ewhs = m.ewhs();
    let boilers = m.boilers();
    let storages = m.storages();

    // Columns, in exactly the order of the layout roles.
    for t in 0..n {
        vars.push((var(format!("grt_buy_t{t}_s{s}"), 0.0, g * sc.dr[t], VarKind::Continuous), -rho * sc.rt[t] * dt / pb));
    }
    for t in 0..n {
        vars.push((var(format!("grt_sell_t{t}_s{s}"), 0.0, g * sc.dr[t], VarKind::Continuous), rho * sc.rt[t] * dt / pb));
    }
    for p in 1..=2 {
        for t in 0..n {
            vars.push((var(format!("psi{p}_t{t}_s{s}"), 0.0, inf, VarKind::Continuous), -rho * m.grid.penalty_cost / pb));
        }
    }
    for (i, b) in m.buildings.iter().enumerate() {
        let hi = b.hvac.p_max_kw(pb);
        for t in 0..n {
            vars.push((var(format!("phvac_b{i}_t{t}_s{s}"), 0.0, hi, VarKind::Continuous), 0.0));
        }
    }
    for (i, b) in m.buildings.iter().enumerate() {
        for t in 0..n {
            for k in 0..3 {
                let (lo, hi) = if k == 0 && band_slot(t) { (b.hvac.band.c_min(), b.hvac.band.c_max()) } else { (-inf, inf) };
                vars.push((var(format!("xhvac{k}_b{i}_t{t}_s{s}"), lo, hi, VarKind::Continuous), 0.0));
            }
        }
    }
    for (k, p) in m.pevs.iter().enumerate() {
        for t in 0..n {
            let hi = p.p_charge_max * sc.availability[k][t] as f64;
            let c = -rho * p.degradation_cost * p.eta_charge * dt / pb;
            vars.push((var(format!("ppev_k{k}_t{t}_s{s}"), 0.0, hi, VarKind::Continuous), c));
        }
    }
    for (k, p) in m.pevs.iter().enumerate() {
        for t in 0..n {
            vars.push((var(format!("epev_k{k}_t{t}_s{s}"), p.e_min, p.e_max, VarKind::Continuous), 0.0));
        }
    }
    for (j, (_, e)) in ewhs.iter().enumerate() {
        for t in 0..n {
            let (lo, hi) = if t >= e.window.0 && t <= e.window.1 { (e.l_min, e.l_max) } else { (0.0, 0.0) };
            vars.push((var(format!("lewh_j{j}_t{t}_s{s}"), lo, hi, VarKind::Continuous), 0.0));
        }
    }
    for (j, (_, e)) in ewhs.iter().enumerate() {
        for t in 0..n {
            let (lo, hi) = if band_slot(t) { (e.band.c_min(), e.band.c_max()) } else { (-inf, inf) };
            vars.push((var(format!("cewh_j{j}_t{t}_s{s}"), lo, hi, VarKind::Continuous), 0.0));
        }
    }
    for (b, (_, h)) in boilers.iter().enumerate() {
        for t in 0..n {
            let c = -rho * m.grid.gas_price[t] / h.h_max;
            vars.push((var(format!("hboil_j{b}_t{t}_s{s}"), 0.0, h.h_max, VarKind::Continuous), c));
        }
    }
    for (u, (_, e)) in storages.iter().enumerate() {
        for t in 0..n {
            let c = -rho * e.degradation_cost * e.eta_charge * dt / pb;
            vars.push((var(format!("pesch_n{u}_t{t}_s{s}"), 0.0, e.p_charge_max, VarKind::Continuous), c));
        }
    }
    for (u, (_, e)) in storages.iter().enumerate() {
        for t in 0..n {
            let c = -rho * e.degradation_cost / e.eta_discharge * dt / pb;
            vars.push((var(format!("pesdis_n{u}_t{t}_s{s}"), 0.0, e.p_discharge_max, VarKind::Continuous), c));
        }
    }
    for (u, (_, e)) in storages.iter().enumerate() {
        for t in 0..n {
            vars.push((var(format!("ees_n{u}_t{t}_s{s}"), e.e_min, e.e_max, VarKind::Continuous), 0.0));
        }
    }
    for u in 0..storages.len() {
        for t in 0..n {
            vars.push((var(format!("ues_n{u}_t{t}_s{s}"), 0.0, 1.0, VarKind::Binary), 0.0));
        }
    }
    let wt = ctx.weights;
    for i in 0..m.buildings.len() {
        for &t in &l.comfort_slots {
            vars.push((var(format!("jhvac_b{i}_t{t}_s{s}"), -inf, 1.0, VarKind::Continuous), rho * wt.hvac));
        }
    }
    let owner = m.pev_owner();
    for k in 0..m.pevs.len() {
        let share = owner[k].map(|i| m.pev_weight(i)).unwrap_or(0.0);
        for &t in &l.comfort_slots {
            vars.push((var(format!("jpev_k{k}_t{t}_s{s}"), -inf, 1.0, VarKind::Continuous), rho * wt.pev * share));
        }
    }
    for j in 0..ewhs.len() {
        for &t in &l.comfort_slots {
            vars.push((var(format!("jewh_j{j}_t{t}_s{s}"), -inf, 1.0, VarKind::Continuous), rho * wt.ewh));
        }
    }
    debug_assert_eq!(vars.len(), l.block_len());

    // HVAC thermal dynamics.
    for (i, b) in m.buildings.iter().enumerate() {
        let h = &b.hvac;
        let gain = h.mode.sigma() * h.cop;
        for t in 0..n {
            for r in 0..3 {
                let mut coeffs = vec![(l.hvac_state(s, i, t, r), 1.0)];
                let mut rhs = h.alpha[r][0] * sc.outdoor_temp[t] + h.alpha[r][1] * sc.irradiance[t];
                for c in 0..3 {
                    if h.beta[r][c] == 0.0 {
                        continue;
                    }
                    if t == 0 {
                        rhs += h.beta[r][c] * h.initial[c];
                    } else {
                        coeffs.push((l.hvac_state(s, i, t - 1, c), -h.beta[r][c]));
                    }
                }
                if h.alpha[r][2] != 0.0 {
                    coeffs.push((l.hvac_power(s, i, t), -h.alpha[r][2] * gain));
                }
                rows.push(Constraint::new(format!("hvac{r}_b{i}_t{t}_s{s}"), coeffs, Sense::Eq, rhs));
            }
        }
    }

    // PEV state of charge.
    for (k, p) in m.pevs.iter().enumerate() {
        for t in 0..n {
            let mut coeffs = vec![(l.pev_energy(s, k, t), 1.0), (l.pev_power(s, k, t), -p.eta_charge * dt)];
            let rhs = if t == 0 {
                p.e_init
            } else {
                coeffs.push((l.pev_energy(s, k, t - 1), -1.0));
                0.0
            };
            rows.push(Constraint::new(format!("pev_k{k}_t{t}_s{s}"), coeffs, Sense::Eq, rhs));
        }
    }

    // EWH energy budget and tank temperature.
    let mut tank_boiler: Vec<Vec<usize>> = vec![Vec::new(); ewhs.len()];
    for b in 0..boilers.len() {
        if let Some(j) = m.boiler_target(b) {
            tank_boiler[j].push(b);
        }
    }
    for (j, (_, e)) in ewhs.iter().enumerate() {
        let coeffs = (e.window.0..=e.window.1).map(|t| (l.ewh_power(s, j, t), dt * KJ_PER_KWH)).collect();
        rows.push(Constraint::new(format!("ewhbudget_j{j}_s{s}"), coeffs, Sense::Eq, sc.ewh_budget[j]));
        let heat_cap = e.mass * e.c_water;
        for t in 0..n {
            let mut coeffs = vec![
                (l.ewh_temp(s, j, t), 1.0),
                (l.ewh_power(s, j, t), -e.zeta * dt * KJ_PER_KWH / heat_cap),
            ];
            for &b in &tank_boiler[j] {
                coeffs.push((l.boiler_heat(s, b, t), -KJ_PER_KBTU / heat_cap));
            }
            let mut rhs = -KJ_PER_KBTU * sc.heat_loss[j][t] / heat_cap;
            if t == 0 {
                rhs += e.temp_init;
            } else {
                coeffs.push((l.ewh_temp(s, j, t - 1), -1.0));
            }
            rows.push(Constraint::new(format!("ewh_j{j}_t{t}_s{s}"), coeffs, Sense::Eq, rhs));
        }
    }

    // Storage dynamics, cyclic condition and single-binary rate limits.
    for (u, (_, e)) in storages.iter().enumerate() {
        for t in 0..n {
            let mut coeffs = vec![
                (l.es_energy(s, u, t), 1.0),
                (l.es_charge(s, u, t), -e.eta_charge * dt),
                (l.es_discharge(s, u, t), dt / e.eta_discharge),
            ];
            let rhs = if t == 0 {
                e.e_init
            } else {
                coeffs.push((l.es_energy(s, u, t - 1), -1.0));
                0.0
            };
            rows.push(Constraint::new(format!("es_n{u}_t{t}_s{s}"), coeffs, Sense::Eq, rhs));
        }
        rows.push(Constraint::new(
            format!("escyc_n{u}_s{s}"),
            vec![(l.es_energy(s, u, 0), 1.0), (l.es_energy(s, u, n - 1), -1.0)],
            Sense::Eq,
            0.0,
        ));
        for t in 0..n {
            let mode = l.es_mode(s, u, t);
            rows.push(Constraint::new(
                format!("esch_n{u}_t{t}_s{s}"),
                vec![(l.es_charge(s, u, t), 1.0), (mode, -e.p_charge_max)],
                Sense::Le,
                0.0,
            ));
            rows.push(Constraint::new(
                format!("esdis_n{u}_t{t}_s{s}"),
                vec![(l.es_discharge(s, u, t), 1.0), (mode, e.p_discharge_max)],
                Sense::Le,
                e.p_discharge_max,
            ));
        }
    }

    // Power balance, heat balance, penalty linearization.
    for t in 0..n {
        let mut coeffs = vec![(l.rt_buy(s, t), 1.0), (l.rt_sell(s, t), -1.0)];
        for u in 0..storages.len() {
            coeffs.push((l.es_discharge(s, u, t), 1.0));
            coeffs.push((l.es_charge(s, u, t), -1.0));
        }
        for j in 0..ewhs.len() {
            coeffs.push((l.ewh_power(s, j, t), -1.0));
        }
        for i in 0..m.buildings.len() {
            coeffs.push((l.hvac_power(s, i, t), -1.0));
        }
        for k in 0..m.pevs.len() {
            coeffs.push((l.pev_power(s, k, t), -1.0));
        }
        let rhs = sc.base_load[t] - sc.solar_total(t);
        rows.push(Constraint::new(format!("power_t{t}_s{s}"), coeffs, Sense::Eq, rhs));

        let mut coeffs: Vec<(VarId, f64)> =
            ewhs.iter().enumerate().map(|(j, (_, e))| (l.ewh_power(s, j, t), e.zeta * dt * KBTU_PER_KWH)).collect();
        coeffs.extend((0..boilers.len()).map(|b| (l.boiler_heat(s, b, t), 1.0)));
        rows.push(Constraint::new(format!("heat_t{t}_s{s}"), coeffs, Sense::Ge, sc.heat_load[t]));

        rows.extend(linearize_penalty(
            (l.da_buy(t), l.da_sell(t)),
            (l.rt_buy(s, t), l.rt_sell(s, t)),
            (l.psi1(s, t), l.psi2(s, t)),
            &format!("t{t}_s{s}"),
        ));
    }

    // Comfort envelopes.
    for (i, b) in m.buildings.iter().enumerate() {
        for &t in &l.comfort_slots {
            let j = l.comfort_hvac(s, i, t).expect("comfort slot");
            let ep = encode_comfort_epigraph(ComfortKind::Hvac(b.hvac.band), j, l.hvac_state(s, i, t, 0), &format!("hvac_b{i}_t{t}_s{s}"))?;
            rows.extend(ep.rows);
        }
    }
    for (k, p) in m.pevs.iter().enumerate() {
        let kind = ComfortKind::Pev { e_base: p.e_base, e_desired: p.e_desired };
        for &t in &l.comfort_slots {
            let j = l.comfort_pev(s, k, t).expect("comfort slot");
            rows.extend(encode_comfort_epigraph(kind, j, l.pev_energy(s, k, t), &format!("pev_k{k}_t{t}_s{s}"))?.rows);
        }
    }
    for (jj, (_, e)) in ewhs.iter().enumerate() {
        for &t in &l.comfort_slots {
            let j = l.comfort_ewh(s, jj, t).expect("comfort slot");
            rows.extend(encode_comfort_epigraph(ComfortKind::Ewh(e.band), j, l.ewh_temp(s, jj, t), &format!("ewh_j{jj}_t{t}_s{s}"))?.rows);
        }
    }

    Ok(Block { vars, rows })
}

/// First-stage bids and per-scenario dispatch read from a solution.
pub fn extract_schedule(built: &BuiltModel, model: &CampusModel, solution: &MilpSolution) -> Result<Schedule> {
    match solution.status {
        MilpStatus::Optimal | MilpStatus::Feasible => {}
        other => return Err(CoreError::Unsolved(format!("solver status {other:?}"))),
    }
    let x = &solution.values;
    if x.len() != built.milp.num_vars() {
        return Err(CoreError::Dimension(format!(
            "solution has {} values, model has {} columns",
            x.len(),
            built.milp.num_vars()
        )));
    }
    let l = &built.layout;
    let n = l.slots;
    let series = |f: &dyn Fn(usize) -> VarId| -> Vec<f64> { (0..n).map(|t| x[f(t).0]).collect() };
    let comfort = |f: &dyn Fn(usize) -> Option<VarId>| -> Vec<f64> {
        (0..n).map(|t| f(t).map(|v| x[v.0].clamp(0.0, 1.0)).unwrap_or(0.0)).collect()
    };
    let mut dispatch = Vec::with_capacity(l.scenarios);
    for s in 0..l.scenarios {
        let hvac_indoor = model
            .buildings
            .iter()
            .enumerate()
            .map(|(i, b)| {
                (0..n)
                    .map(|t| (0..3).map(|k| b.hvac.gamma[k] * x[l.hvac_state(s, i, t, k).0]).sum())
                    .collect()
            })
            .collect();
        dispatch.push(Dispatch {
            scenario: s,
            probability: built.probabilities[s],
            rt_buy: series(&|t| l.rt_buy(s, t)),
            rt_sell: series(&|t| l.rt_sell(s, t)),
            psi1: series(&|t| l.psi1(s, t)),
            psi2: series(&|t| l.psi2(s, t)),
            hvac_power: (0..l.buildings).map(|i| series(&|t| l.hvac_power(s, i, t))).collect(),
            hvac_indoor,
            pev_power: (0..l.pevs).map(|k| series(&|t| l.pev_power(s, k, t))).collect(),
            pev_energy: (0..l.pevs).map(|k| series(&|t| l.pev_energy(s, k, t))).collect(),
            ewh_power: (0..l.ewhs).map(|j| series(&|t| l.ewh_power(s, j, t))).collect(),
            ewh_temp: (0..l.ewhs).map(|j| series(&|t| l.ewh_temp(s, j, t))).collect(),
            boiler_heat: (0..l.boilers).map(|b| series(&|t| l.boiler_heat(s, b, t))).collect(),
            es_charge: (0..l.storages).map(|u| series(&|t| l.es_charge(s, u, t))).collect(),
            es_discharge: (0..l.storages).map(|u| series(&|t| l.es_discharge(s, u, t))).collect(),
            es_energy: (0..l.storages).map(|u| series(&|t| l.es_energy(s, u, t))).collect(),
            es_mode: (0..l.storages).map(|u| series(&|t| l.es_mode(s, u, t)).into_iter().map(f64::round).collect()).collect(),
            comfort_hvac: (0..l.buildings).map(|i| comfort(&|t| l.comfort_hvac(s, i, t))).collect(),
            comfort_pev: (0..l.pevs).map(|k| comfort(&|t| l.comfort_pev(s, k, t))).collect(),
            comfort_ewh: (0..l.ewhs).map(|j| comfort(&|t| l.comfort_ewh(s, j, t))).collect(),
        });
    }
    Ok(Schedule {
        slots: n,
        da_buy: series(&|t| l.da_buy(t)),
        da_sell: series(&|t| l.da_sell(t)),
        dispatch,
    })
}
