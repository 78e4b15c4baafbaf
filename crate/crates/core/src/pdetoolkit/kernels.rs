//! Finite-difference solvers on uniform grids.
//!
//! | category | scheme |
//! |---|---|
//! | heat, diffusion, diffusion_reaction | Crank-Nicolson (FTCS when `explicit`), reaction explicit |
//! | wave | leapfrog, Taylor start step |
//! | advection | first-order upwind |
//! | laplace, poisson | Gauss-Seidel SOR |
//!
//! Neumann values are outward normal derivatives and enter through ghost
//! points.

use std::collections::BTreeMap;

use thiserror::Error;
use tracing::debug;

use super::artifacts::{BoundaryType, Domain, Location, PdeCategory, Problem, Scheme, Solution, SolverConfig, SolverMeta};
use crate::exprlang::{Bindings, ExprError, SourceExpr};

pub const SOR_OMEGA: f64 = 1.5;
pub const SOR_TOLERANCE: f64 = 1e-8;
pub const SOR_MAX_SWEEPS: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(
        "stability violation: {number} {ratio:.4} exceeds {limit}; use dt <= {suggested_dt:.6e} (nt >= {suggested_nt})"
    )]
    Stability { number: String, ratio: f64, limit: f64, suggested_dt: f64, suggested_nt: usize },
    #[error("SOR did not converge: residual {residual:.3e} after {sweeps} sweeps")]
    NonConvergence { residual: f64, sweeps: usize },
    #[error("incomplete problem: {0}")]
    Incomplete(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("solution became non-finite")]
    NonFinite,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
    let h = (max - min) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| min + i as f64 * h).collect();
    v[n - 1] = max;
    v
}

/// Solves a tridiagonal system. `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

fn eval_xt(e: &SourceExpr, x: f64, t: f64) -> Result<f64, KernelError> {
    Ok(e.eval(&Bindings::xt(x, t))?)
}

#[derive(Clone, Copy)]
enum End<'a> {
    Dirichlet(&'a SourceExpr),
    Neumann(&'a SourceExpr),
}

struct Line<'a> {
    x: Vec<f64>,
    dx: f64,
    left: Option<End<'a>>,
    right: Option<End<'a>>,
}

impl<'a> Line<'a> {
    fn new(problem: &'a Problem, nx: usize) -> Result<Self, KernelError> {
        let (xmin, xmax) = match problem.domain() {
            Domain::Interval { xmin, xmax } => (xmin, xmax),
            Domain::Rectangle { .. } => {
                return Err(KernelError::Unsupported(format!("{} on a rectangle", problem.pde.category)));
            }
        };
        let side = |s: Location| {
            problem.bc_for(s).map(|bc| match bc.btype {
                BoundaryType::Dirichlet => End::Dirichlet(&bc.value),
                BoundaryType::Neumann => End::Neumann(&bc.value),
            })
        };
        Ok(Line { x: axis(xmin, xmax, nx), dx: (xmax - xmin) / (nx - 1) as f64, left: side(Location::Left), right: side(Location::Right) })
    }

    fn n(&self) -> usize {
        self.x.len()
    }

    fn require_both(&self) -> Result<(), KernelError> {
        if self.left.is_none() || self.right.is_none() {
            return Err(KernelError::Incomplete("boundary conditions on both ends are required".into()));
        }
        Ok(())
    }

    fn sample(&self, e: &SourceExpr, t: f64) -> Result<Vec<f64>, KernelError> {
        self.x.iter().map(|&x| eval_xt(e, x, t)).collect()
    }

    /// Unscaled second difference `u[i-1] - 2u[i] + u[i+1]`, with ghost
    /// points at Neumann ends. Dirichlet ends get 0.
    fn second_diff(&self, u: &[f64], t: f64) -> Result<Vec<f64>, KernelError> {
        let n = u.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = u[i - 1] - 2.0 * u[i] + u[i + 1];
        }
        if let Some(End::Neumann(g)) = self.left {
            out[0] = 2.0 * (u[1] - u[0]) + 2.0 * self.dx * eval_xt(g, self.x[0], t)?;
        }
        if let Some(End::Neumann(g)) = self.right {
            out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) + 2.0 * self.dx * eval_xt(g, self.x[n - 1], t)?;
        }
        Ok(out)
    }

    fn impose_dirichlet(&self, u: &mut [f64], t: f64) -> Result<(), KernelError> {
        let n = u.len();
        if let Some(End::Dirichlet(g)) = self.left {
            u[0] = eval_xt(g, self.x[0], t)?;
        }
        if let Some(End::Dirichlet(g)) = self.right {
            u[n - 1] = eval_xt(g, self.x[n - 1], t)?;
        }
        Ok(())
    }
}

struct Clock {
    t0: f64,
    t1: f64,
    nt: usize,
    dt: f64,
}

impl Clock {
    fn new(problem: &Problem, cfg: &SolverConfig) -> Result<Self, KernelError> {
        let time = problem.time.ok_or_else(|| KernelError::Incomplete(format!("{} needs a time domain", problem.pde.category)))?;
        let nt = cfg.nt.ok_or_else(|| KernelError::Config("nt is required for time-dependent problems".into()))?;
        if nt == 0 {
            return Err(KernelError::Config("nt must be positive".into()));
        }
        Ok(Clock { t0: time.t0, t1: time.t1, nt, dt: (time.t1 - time.t0) / nt as f64 })
    }

    fn at(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }

    fn violation(&self, number: &str, ratio: f64, limit: f64, max_dt: f64) -> KernelError {
        KernelError::Stability {
            number: number.to_string(),
            ratio,
            limit,
            suggested_dt: max_dt,
            suggested_nt: ((self.t1 - self.t0) / max_dt).ceil() as usize,
        }
    }
}

fn finish(solution: Solution) -> Result<Solution, KernelError> {
    if solution.u.iter().all(|v| v.is_finite()) {
        Ok(solution)
    } else {
        Err(KernelError::NonFinite)
    }
}

pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<Solution, KernelError> {
    let category = problem.pde.category;
    if cfg.nx < 3 {
        return Err(KernelError::Config("nx must be at least 3".into()));
    }
    debug!(%category, nx = cfg.nx, nt = ?cfg.nt, "solving");
    match category {
        PdeCategory::Heat | PdeCategory::Diffusion | PdeCategory::DiffusionReaction => diffusion(problem, cfg),
        PdeCategory::Wave => wave(problem, cfg),
        PdeCategory::Advection => advection(problem, cfg),
        PdeCategory::Laplace | PdeCategory::Poisson => elliptic(problem, cfg),
        reserved => Err(KernelError::Unsupported(format!("no solver for category {reserved}"))),
    }
}

fn initial_state(problem: &Problem, line: &Line, t0: f64) -> Result<Vec<f64>, KernelError> {
    let ic = problem
        .ic
        .as_ref()
        .ok_or_else(|| KernelError::Incomplete(format!("{} needs an initial condition", problem.pde.category)))?;
    line.sample(&ic.value, t0)
}

fn coefficient(value: Option<f64>, name: &str, problem: &Problem) -> Result<f64, KernelError> {
    value.ok_or_else(|| KernelError::Incomplete(format!("{} needs coefficient {name}", problem.pde.category)))
}

fn diffusion(problem: &Problem, cfg: &SolverConfig) -> Result<Solution, KernelError> {
    let pde = &problem.pde;
    let alpha = coefficient(pde.alpha, "alpha", problem)?;
    let k = match pde.category {
        PdeCategory::DiffusionReaction => coefficient(pde.reaction, "reaction", problem)?,
        _ => pde.reaction.unwrap_or(0.0),
    };
    let line = Line::new(problem, cfg.nx)?;
    line.require_both()?;
    let clock = Clock::new(problem, cfg)?;
    let (n, dx, dt) = (line.n(), line.dx, clock.dt);
    let r = alpha * dt / (dx * dx);
    let source = |t: f64| -> Result<Vec<f64>, KernelError> {
        match &pde.source {
            Some(f) => line.sample(f, t),
            None => Ok(vec![0.0; n]),
        }
    };

    let mut u = initial_state(problem, &line, clock.t0)?;
    let explicit = cfg.scheme == Scheme::Explicit;
    if explicit && r > 0.5 {
        return Err(clock.violation("diffusion number", r, 0.5, 0.5 * dx * dx / alpha));
    }

    let mut f_now = source(clock.t0)?;
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 0..clock.nt {
        let (t, t_next) = (clock.at(step), clock.at(step + 1));
        let f_next = source(t_next)?;
        let lap = line.second_diff(&u, t)?;
        if explicit {
            for i in 0..n {
                u[i] += r * lap[i] + dt * (f_now[i] + k * u[i]);
            }
        } else {
            // (I - r/2 D) u' = (I + r/2 D) u + dt/2 (f + f') + dt k u; the
            // ghost contributions at time t' are folded into the rhs
            let lap_next_bc = line.second_diff(&vec![0.0; n], t_next)?;
            for i in 0..n {
                lower[i] = -0.5 * r;
                diag[i] = 1.0 + r;
                upper[i] = -0.5 * r;
                rhs[i] = u[i] + 0.5 * r * (lap[i] + lap_next_bc[i]) + 0.5 * dt * (f_now[i] + f_next[i]) + dt * k * u[i];
            }
            if line.left.is_some_and(|e| matches!(e, End::Neumann(_))) {
                upper[0] = -r;
            }
            if line.right.is_some_and(|e| matches!(e, End::Neumann(_))) {
                lower[n - 1] = -r;
            }
            for (i, end) in [(0, line.left), (n - 1, line.right)] {
                if let Some(End::Dirichlet(g)) = end {
                    lower[i] = 0.0;
                    upper[i] = 0.0;
                    diag[i] = 1.0;
                    rhs[i] = eval_xt(g, line.x[i], t_next)?;
                }
            }
            u = thomas(&lower, &diag, &upper, &rhs);
        }
        line.impose_dirichlet(&mut u, t_next)?;
        f_now = f_next;
    }

    let stability = BTreeMap::from([("diffusion_number".to_string(), r)]);
    finish(Solution {
        category: pde.category,
        x: line.x,
        y: None,
        t: Some(clock.t1),
        u,
        meta: SolverMeta {
            scheme: if explicit { "ftcs" } else { "crank_nicolson" }.into(),
            steps: clock.nt,
            stability,
            residual: None,
            omega: None,
        },
    })
}

/// Boundary treatment for one end of a [`Leapfrog`] line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeapfrogEnd {
    Fixed(f64),
    /// Outward normal derivative times the grid spacing.
    Gradient(f64),
}

/// Two-level leapfrog state for `u_tt = c^2 u_xx`. Swapping the two levels
/// reverses the direction of time.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    prev: Vec<f64>,
    cur: Vec<f64>,
    courant_sq: f64,
}

impl Leapfrog {
    pub fn new(prev: Vec<f64>, cur: Vec<f64>, courant: f64) -> Self {
        assert_eq!(prev.len(), cur.len());
        Leapfrog { prev, cur, courant_sq: courant * courant }
    }

    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    pub fn previous(&self) -> &[f64] {
        &self.prev
    }

    /// Advances one step; `forcing` is already scaled by `dt^2`.
    pub fn step(&mut self, left: LeapfrogEnd, right: LeapfrogEnd, forcing: Option<&[f64]>) {
        let n = self.cur.len();
        let u = &self.cur;
        let mut next = vec![0.0; n];
        for i in 0..n {
            let lap = if i == 0 || i == n - 1 {
                let (end, inner) = if i == 0 { (left, u[1]) } else { (right, u[n - 2]) };
                match end {
                    LeapfrogEnd::Fixed(v) => {
                        next[i] = v;
                        continue;
                    }
                    LeapfrogEnd::Gradient(g) => 2.0 * (inner - u[i]) + 2.0 * g,
                }
            } else {
                u[i - 1] - 2.0 * u[i] + u[i + 1]
            };
            next[i] = 2.0 * u[i] - self.prev[i] + self.courant_sq * lap + forcing.map_or(0.0, |f| f[i]);
        }
        self.prev = std::mem::replace(&mut self.cur, next);
    }

    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.prev, &mut self.cur);
    }
}

fn wave(problem: &Problem, cfg: &SolverConfig) -> Result<Solution, KernelError> {
    if cfg.scheme == Scheme::Implicit {
        return Err(KernelError::Unsupported("implicit scheme for wave; use explicit or auto".into()));
    }
    let pde = &problem.pde;
    let c = coefficient(pde.c, "c", problem)?;
    let line = Line::new(problem, cfg.nx)?;
    line.require_both()?;
    let clock = Clock::new(problem, cfg)?;
    let (n, dx, dt) = (line.n(), line.dx, clock.dt);
    let courant = c.abs() * dt / dx;
    if courant > 1.0 {
        return Err(clock.violation("courant number", courant, 1.0, dx / c.abs()));
    }
    let forcing = |t: f64| -> Result<Option<Vec<f64>>, KernelError> {
        match &pde.source {
            Some(f) => Ok(Some(line.sample(f, t)?.into_iter().map(|v| v * dt * dt).collect())),
            None => Ok(None),
        }
    };
    // stepping from t: fixed ends take the value at t + dt, gradient ends
    // enter the difference taken at t
    let end = |e: Option<End>, x: f64, t: f64| -> Result<LeapfrogEnd, KernelError> {
        Ok(match e.expect("checked above") {
            End::Dirichlet(g) => LeapfrogEnd::Fixed(eval_xt(g, x, t + dt)?),
            End::Neumann(g) => LeapfrogEnd::Gradient(dx * eval_xt(g, x, t)?),
        })
    };

    let mut u0 = initial_state(problem, &line, clock.t0)?;
    line.impose_dirichlet(&mut u0, clock.t0)?;
    let v0 = match problem.ic.as_ref().and_then(|ic| ic.velocity.as_ref()) {
        Some(v) => line.sample(v, clock.t0)?,
        None => vec![0.0; n],
    };
    // Taylor start: u1 = u0 + dt v0 + (C^2/2) d2 u0 + (dt^2/2) f
    let lap = line.second_diff(&u0, clock.t0)?;
    let f0 = forcing(clock.t0)?;
    let mut u1: Vec<f64> = (0..n)
        .map(|i| u0[i] + dt * v0[i] + 0.5 * courant * courant * lap[i] + 0.5 * f0.as_ref().map_or(0.0, |f| f[i]))
        .collect();
    line.impose_dirichlet(&mut u1, clock.at(1))?;

    let mut state = Leapfrog::new(u0, u1, courant);
    for step in 1..clock.nt {
        let t = clock.at(step);
        let (l, r) = (end(line.left, line.x[0], t)?, end(line.right, line.x[n - 1], t)?);
        state.step(l, r, forcing(t)?.as_deref());
    }
    let u = state.current().to_vec();

    finish(Solution {
        category: pde.category,
        x: line.x,
        y: None,
        t: Some(clock.t1),
        u,
        meta: SolverMeta {
            scheme: "leapfrog".into(),
            steps: clock.nt,
            stability: BTreeMap::from([("courant".to_string(), courant)]),
            residual: None,
            omega: None,
        },
    })
}

fn advection(problem: &Problem, cfg: &SolverConfig) -> Result<Solution, KernelError> {
    if cfg.scheme == Scheme::Implicit {
        return Err(KernelError::Unsupported("implicit scheme for advection; use explicit or auto".into()));
    }
    let pde = &problem.pde;
    let a = coefficient(pde.a, "a", problem)?;
    let line = Line::new(problem, cfg.nx)?;
    let clock = Clock::new(problem, cfg)?;
    let (n, dx, dt) = (line.n(), line.dx, clock.dt);
    let courant = a.abs() * dt / dx;
    if courant > 1.0 {
        return Err(clock.violation("courant number", courant, 1.0, dx / a.abs()));
    }
    let mut u = initial_state(problem, &line, clock.t0)?;
    let forward = a >= 0.0;
    let (inflow, inflow_end) = if forward { (0, line.left) } else { (n - 1, line.right) };
    let upstream = |i: usize| if forward { i - 1 } else { i + 1 };
    for step in 0..clock.nt {
        let (t, t_next) = (clock.at(step), clock.at(step + 1));
        let f = match &pde.source {
            Some(f) => line.sample(f, t)?,
            None => vec![0.0; n],
        };
        let mut next = u.clone();
        for i in 0..n {
            if i != inflow {
                next[i] = u[i] - courant * (u[i] - u[upstream(i)]) + dt * f[i];
            }
        }
        match inflow_end {
            Some(End::Dirichlet(g)) => next[inflow] = eval_xt(g, line.x[inflow], t_next)?,
            Some(End::Neumann(g)) => {
                let inner = if forward { next[1] } else { next[n - 2] };
                next[inflow] = inner + dx * eval_xt(g, line.x[inflow], t_next)?;
            }
            None => {}
        }
        // a condition on the outflow end is honoured as given
        let (outflow, outflow_end) = if forward { (n - 1, line.right) } else { (0, line.left) };
        if let Some(End::Dirichlet(g)) = outflow_end {
            next[outflow] = eval_xt(g, line.x[outflow], t_next)?;
        }
        u = next;
    }
    finish(Solution {
        category: pde.category,
        x: line.x,
        y: None,
        t: Some(clock.t1),
        u,
        meta: SolverMeta {
            scheme: "upwind".into(),
            steps: clock.nt,
            stability: BTreeMap::from([("courant".to_string(), courant)]),
            residual: None,
            omega: None,
        },
    })
}

fn elliptic(problem: &Problem, cfg: &SolverConfig) -> Result<Solution, KernelError> {
    let pde = &problem.pde;
    let domain = problem.domain();
    let (xmin, xmax) = domain.x_range();
    let sides: &[Location] = match domain {
        Domain::Interval { .. } => &[Location::Left, Location::Right],
        Domain::Rectangle { .. } => &[Location::Bottom, Location::Top, Location::Left, Location::Right],
    };
    let mut dirichlet = Vec::new();
    for &side in sides {
        let bc = problem
            .bc_for(side)
            .ok_or_else(|| KernelError::Incomplete(format!("no boundary condition on the {side:?} side").to_lowercase()))?;
        if bc.btype != BoundaryType::Dirichlet {
            return Err(KernelError::Unsupported(format!("{:?} boundaries for {}", bc.btype, pde.category).to_lowercase()));
        }
        dirichlet.push((side, &bc.value));
    }
    let source = match pde.category {
        PdeCategory::Poisson => Some(pde.source.as_ref().ok_or_else(|| KernelError::Incomplete("poisson needs a source term".into()))?),
        _ => None,
    };

    let nx = cfg.nx;
    let x = axis(xmin, xmax, nx);
    let (y, ny) = match domain.y_range() {
        Some((ymin, ymax)) => {
            let ny = cfg.ny.unwrap_or(nx);
            if ny < 3 {
                return Err(KernelError::Config("ny must be at least 3".into()));
            }
            (Some(axis(ymin, ymax, ny)), ny)
        }
        None => (None, 1),
    };
    let point = |i: usize, j: usize| -> Bindings {
        match &y {
            Some(y) => Bindings::xyt(x[i], y[j], 0.0),
            None => Bindings::xt(x[i], 0.0),
        }
    };

    let idx = |i: usize, j: usize| j * nx + i;
    let mut u = vec![0.0; nx * ny];
    let mut fixed = vec![false; nx * ny];
    for (side, g) in &dirichlet {
        let cells: Vec<(usize, usize)> = match side {
            Location::Left => (0..ny).map(|j| (0, j)).collect(),
            Location::Right => (0..ny).map(|j| (nx - 1, j)).collect(),
            Location::Bottom => (0..nx).map(|i| (i, 0)).collect(),
            Location::Top => (0..nx).map(|i| (i, ny - 1)).collect(),
            Location::All => unreachable!("sides are resolved individually"),
        };
        for (i, j) in cells {
            u[idx(i, j)] = g.eval(&point(i, j))?;
            fixed[idx(i, j)] = true;
        }
    }
    let mut f = vec![0.0; nx * ny];
    if let Some(s) = source {
        for j in 0..ny {
            for i in 0..nx {
                f[idx(i, j)] = s.eval(&point(i, j))?;
            }
        }
    }

    let hx2 = ((xmax - xmin) / (nx - 1) as f64).powi(2);
    let hy2 = y.as_ref().map(|y| (y[1] - y[0]).powi(2));
    let diag = 2.0 / hx2 + hy2.map_or(0.0, |h| 2.0 / h);
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < SOR_MAX_SWEEPS {
        sweeps += 1;
        residual = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let k = idx(i, j);
                if fixed[k] {
                    continue;
                }
                let mut sum = (u[k - 1] + u[k + 1]) / hx2;
                if let Some(h) = hy2 {
                    sum += (u[k - nx] + u[k + nx]) / h;
                }
                let gs = (sum - f[k]) / diag;
                residual = residual.max((gs - u[k]).abs());
                u[k] += SOR_OMEGA * (gs - u[k]);
            }
        }
        if residual < SOR_TOLERANCE {
            break;
        }
    }
    if residual >= SOR_TOLERANCE {
        return Err(KernelError::NonConvergence { residual, sweeps });
    }
    debug!(sweeps, residual, "sor converged");
    finish(Solution {
        category: pde.category,
        x,
        y,
        t: None,
        u,
        meta: SolverMeta {
            scheme: "sor".into(),
            steps: sweeps,
            stability: BTreeMap::new(),
            residual: Some(residual),
            omega: Some(SOR_OMEGA),
        },
    })
}
