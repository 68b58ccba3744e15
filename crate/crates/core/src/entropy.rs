//! Lower bounds for topological entropy of the skew map
//! `T(λ, z) = (σλ, H_λ z)` from greedy `(n, ε)`-separated sets.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{BaseDynamics, BasePoint};
use crate::currents::{laplacian_measure, GridGeometry, SliceSpec};
use crate::error::{Error, Result};
use crate::filtration::Region;
use crate::green::{FiberChain, GreenOptions, GreenStatus, SkewSystem};
use crate::orbit::OrbitState;
use crate::par::map_range;
use crate::point::C2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparatedSetEstimate {
    pub n: usize,
    pub eps: f64,
    pub s_n: usize,
    /// `ln(s_n) / n`.
    pub rate: f64,
}

/// Where candidate points come from: a slice window in which points of
/// `J⁺` are located before being pushed towards `J = J⁺ ∩ J⁻`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateWindow {
    pub slice: SliceSpec,
    pub center: Complex64,
    pub half: f64,
}

impl CandidateWindow {
    /// The slice `{x = 0}` over `|Re y|, |Im y| ≤ half`.
    pub fn vertical(half: f64) -> Self {
        CandidateWindow {
            slice: SliceSpec::FixedX(Complex64::new(0.0, 0.0)),
            center: Complex64::new(0.0, 0.0),
            half,
        }
    }
}

/// How candidate points are generated and screened.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateOptions {
    /// Upper bound on the pluricomplex Green function.
    pub green_cap: f64,
    /// Options for the Green evaluations used in the screen.
    pub green: GreenOptions,
    /// Side of the slice raster used to find the bounded/escaping transition.
    pub resolution: usize,
    /// Bisection steps between a bounded and an escaping pixel.
    pub bisection_steps: usize,
    /// Forward pushes before screening; `None` picks the smallest count that
    /// brings the largest possible `G⁻` on `V_R` below half the cap.
    pub push: Option<usize>,
    /// Number of base points, each with its own slice raster.
    pub base_points: usize,
    /// Give up after this many draws per requested candidate.
    pub max_draws_per_candidate: usize,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        CandidateOptions {
            green_cap: 0.05,
            green: GreenOptions { tol: 1e-4, n_max: 60 },
            resolution: 256,
            bisection_steps: 48,
            push: None,
            base_points: 4,
            max_draws_per_candidate: 20,
        }
    }
}

/// Candidate orbits: `fiber[k * steps + i]` is the `i`-th image of point `k`.
#[derive(Clone, Debug)]
pub struct CandidateCloud {
    pub steps: usize,
    pub base: Vec<BasePoint>,
    pub fiber: Vec<C2>,
    pub draws: usize,
    pub push: usize,
}

impl CandidateCloud {
    pub fn len(&self) -> usize {
        self.base.len() / self.steps.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn point(&self, k: usize) -> (BasePoint, C2) {
        (self.base[k * self.steps], self.fiber[k * self.steps])
    }

    fn dist_at(&self, a: usize, b: usize, i: usize) -> f64 {
        let (pa, pb) = (a * self.steps + i, b * self.steps + i);
        self.base[pa].distance(&self.base[pb]) + self.fiber[pa].dist(&self.fiber[pb])
    }

    /// Bowen distance `d_n` between candidates `a` and `b`.
    pub fn dn(&self, a: usize, b: usize, n: usize) -> f64 {
        (0..n.min(self.steps)).map(|i| self.dist_at(a, b, i)).fold(0.0, f64::max)
    }
}

/// Bounded/escaping neighbour pairs of one slice raster, with cumulative
/// Laplacian-mass weights.
struct EdgeTable {
    lambda: BasePoint,
    chain: FiberChain,
    geometry: GridGeometry,
    /// `(bounded cell, escaping cell)`.
    edges: Vec<(usize, usize)>,
    cumulative: Vec<f64>,
}

impl EdgeTable {
    fn pick<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|c| *c <= u).min(self.edges.len() - 1);
        self.edges[k]
    }
}

const BATCH: usize = 4096;

impl SkewSystem {
    fn require_skew(&self) -> Result<()> {
        if self.base().sigma == BaseDynamics::Shift {
            Err(Error::UnsupportedBase("shift"))
        } else {
            Ok(())
        }
    }

    /// `d_n(p, q) = max_{0≤i<n} (dist(σ^iλ, σ^iλ') + ‖z_i − z'_i‖)`.
    pub fn dn_distance(&self, p: (BasePoint, C2), q: (BasePoint, C2), n: usize) -> Result<f64> {
        self.require_skew()?;
        let sigma = self.base().sigma;
        let (mut lp, mut zp) = p;
        let (mut lq, mut zq) = q;
        let mut d = 0.0f64;
        for i in 0..n {
            d = d.max(lp.distance(&lq) + zp.dist(&zq));
            if i + 1 < n {
                zp = self.family().instantiate(&lp).eval(zp);
                zq = self.family().instantiate(&lq).eval(zq);
                lp = sigma.advance(&lp, 1)?;
                lq = sigma.advance(&lq, 1)?;
            }
        }
        Ok(d)
    }

    /// Candidate points near `J`. On a slice raster of `G⁺_λ`, a pair of
    /// neighbouring bounded/escaping pixels is drawn with probability
    /// proportional to their Laplacian mass, jittered inside the pixels and
    /// bisected down to a point of `J⁺`. That point is pushed forward, which
    /// divides `G⁻` by `d` per step while `G⁺` stays near zero, and kept if
    /// its pluricomplex Green value is below the cap and its next `steps − 1`
    /// images stay in the bidisc `V_R`. Draw `k` uses ChaCha8 stream `k`, so
    /// the cloud does not depend on the thread count.
    pub fn entropy_candidates(
        &self,
        window: &CandidateWindow,
        n_candidates: usize,
        steps: usize,
        seed: u64,
        opts: &CandidateOptions,
    ) -> Result<CandidateCloud> {
        self.require_skew()?;
        let steps = steps.max(1);
        let push = opts.push.unwrap_or_else(|| self.default_push(opts.green_cap));
        let tables = self.edge_tables(window, opts)?;
        if tables.is_empty() {
            return Err(Error::EmptyCandidateSet);
        }
        let max_draws = n_candidates.saturating_mul(opts.max_draws_per_candidate).max(BATCH);
        let mut cloud = CandidateCloud {
            steps,
            base: Vec::with_capacity(n_candidates * steps),
            fiber: Vec::with_capacity(n_candidates * steps),
            draws: 0,
            push,
        };
        let mut found = 0;
        while found < n_candidates && cloud.draws < max_draws {
            let start = cloud.draws;
            let batch = map_range(BATCH, |b| {
                let k = start + b;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                self.draw_candidate(&tables[k % tables.len()], &mut rng, steps, push, opts)
            });
            cloud.draws += BATCH;
            for orbit in batch.into_iter().flatten() {
                if found == n_candidates {
                    break;
                }
                for (l, z) in orbit {
                    cloud.base.push(l);
                    cloud.fiber.push(z);
                }
                found += 1;
            }
        }
        if found == 0 {
            return Err(Error::EmptyCandidateSet);
        }
        Ok(cloud)
    }

    fn default_push(&self, cap: f64) -> usize {
        let g_max = (core::f64::consts::SQRT_2 * self.radius()).ln() + self.tails().minus;
        let d = self.degree() as f64;
        let mut k = 0;
        let mut g = g_max;
        while g >= 0.5 * cap && k < 64 {
            g /= d;
            k += 1;
        }
        k
    }

    fn edge_tables(&self, window: &CandidateWindow, opts: &CandidateOptions) -> Result<Vec<EdgeTable>> {
        let geometry = GridGeometry::square(window.slice, window.center, window.half, opts.resolution)?;
        let per = opts.base_points.max(1);
        let grid = self.base().space.grid(per);
        let stride = (grid.len() / per).max(1);
        let mut tables = Vec::new();
        for lambda in grid.into_iter().step_by(stride).take(per) {
            let chain = self.chain_plus(&lambda, self.chain_len(&opts.green))?;
            let field = self.green_field(&chain, &geometry, &opts.green);
            let lap = laplacian_measure(&field.map(|e| e.value));
            let (nx, ny) = (geometry.nx, geometry.ny);
            let bounded = |c: usize| field.data[c].status == GreenStatus::BoundedCertified;
            let escaping = |c: usize| field.data[c].status == GreenStatus::EscapedCertified;
            let mut edges = Vec::new();
            let mut cumulative = Vec::new();
            let mut acc = 0.0;
            for j in 0..ny {
                for i in 0..nx {
                    let c = j * nx + i;
                    let right = (i + 1 < nx).then_some(c + 1);
                    let up = (j + 1 < ny).then_some(c + nx);
                    for o in [right, up].into_iter().flatten() {
                        let pair = if bounded(c) && escaping(o) {
                            (c, o)
                        } else if escaping(c) && bounded(o) {
                            (o, c)
                        } else {
                            continue;
                        };
                        acc += lap.density[c].abs() + lap.density[o].abs() + f64::MIN_POSITIVE;
                        edges.push(pair);
                        cumulative.push(acc);
                    }
                }
            }
            if !edges.is_empty() {
                tables.push(EdgeTable {
                    lambda,
                    chain,
                    geometry,
                    edges,
                    cumulative,
                });
            }
        }
        Ok(tables)
    }

    fn escapes(&self, chain: &FiberChain, z: C2, n_max: usize) -> bool {
        let radius = self.radius();
        let mut s = OrbitState::new(z);
        for n in 0..n_max {
            if Region::of_state(&s, radius) == Region::Plus {
                return true;
            }
            s = match chain.apply(n, s) {
                Some(t) => t,
                None => return false,
            };
        }
        Region::of_state(&s, radius) == Region::Plus
    }

    fn draw_candidate<R: Rng>(
        &self,
        table: &EdgeTable,
        rng: &mut R,
        steps: usize,
        push: usize,
        opts: &CandidateOptions,
    ) -> Option<Vec<(BasePoint, C2)>> {
        let g = &table.geometry;
        let n_max = opts.green.n_max;
        let (cb, ce) = table.pick(rng);
        let mut jitter = |c: usize| {
            g.param(c % g.nx, c / g.nx)
                + Complex64::new((rng.random::<f64>() - 0.5) * g.dx, (rng.random::<f64>() - 0.5) * g.dy)
        };
        let (mut wb, mut we) = (jitter(cb), jitter(ce));
        if self.escapes(&table.chain, g.slice.point(wb), n_max)
            || !self.escapes(&table.chain, g.slice.point(we), n_max)
        {
            return None;
        }
        for _ in 0..opts.bisection_steps {
            let mid = 0.5 * (wb + we);
            if self.escapes(&table.chain, g.slice.point(mid), n_max) {
                we = mid;
            } else {
                wb = mid;
            }
        }
        let sigma = self.base().sigma;
        let (mut l, mut z) = (table.lambda, g.slice.point(wb));
        for _ in 0..push {
            z = self.family().instantiate(&l).eval(z);
            l = sigma.advance(&l, 1).ok()?;
        }
        let radius = self.radius();
        let mut orbit = Vec::with_capacity(steps);
        let (mut lw, mut w) = (l, z);
        for i in 0..steps {
            if Region::of(&w, radius) != Region::Bidisc {
                return None;
            }
            orbit.push((lw, w));
            if i + 1 < steps {
                w = self.family().instantiate(&lw).eval(w);
                lw = sigma.advance(&lw, 1).ok()?;
            }
        }
        let gp = self.pluri_green(&l, z, &opts.green).ok()?;
        (gp < opts.green_cap).then_some(orbit)
    }

    /// Greedy separated-set estimates for every `n` in `n_range` and every
    /// `ε` in `eps`, on one candidate cloud.
    pub fn entropy_lower_bound(
        &self,
        window: &CandidateWindow,
        eps: &[f64],
        n_range: (usize, usize),
        n_candidates: usize,
        seed: u64,
    ) -> Result<Vec<SeparatedSetEstimate>> {
        if eps.iter().any(|e| !(*e > 0.0)) || n_range.0 < 1 || n_range.0 > n_range.1 {
            return Err(Error::InvalidParameter("need ε > 0 and 1 ≤ n_lo ≤ n_hi".into()));
        }
        let cloud = self.entropy_candidates(window, n_candidates, n_range.1, seed, &CandidateOptions::default())?;
        Ok(estimates(&cloud, eps, n_range, &shuffled_order(cloud.len(), seed)))
    }
}

/// Separated-set estimates for a given cloud and packing order.
pub fn estimates(cloud: &CandidateCloud, eps: &[f64], n_range: (usize, usize), order: &[usize]) -> Vec<SeparatedSetEstimate> {
    let mut out = Vec::new();
    for n in n_range.0..=n_range.1 {
        for (eps, s) in nested_packing(cloud, n, eps, order) {
            out.push(SeparatedSetEstimate {
                n,
                eps,
                s_n: s,
                rate: (s as f64).ln() / n as f64,
            });
        }
    }
    out
}

/// A seeded permutation of `0..n`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    order.shuffle(&mut rng);
    order
}

fn cell_key(z: &C2, eps: f64) -> [i64; 4] {
    [
        (z.x.re / eps).floor() as i64,
        (z.x.im / eps).floor() as i64,
        (z.y.re / eps).floor() as i64,
        (z.y.im / eps).floor() as i64,
    ]
}

/// First-fit packing in `order`, starting from `seed_members`: a candidate
/// joins if its `d_n` distance to every member exceeds `eps`. Since `d_n`
/// dominates the time-zero fiber distance, only members in the 3⁴
/// neighbouring hash cells (of side `eps`) at time zero can conflict.
pub fn greedy_packing(cloud: &CandidateCloud, n: usize, eps: f64, order: &[usize], seed_members: &[usize]) -> Vec<usize> {
    let mut grid: BTreeMap<[i64; 4], Vec<usize>> = BTreeMap::new();
    let mut is_member = alloc::vec![false; cloud.len()];
    let mut members = Vec::new();
    let key = |k: usize| cell_key(&cloud.fiber[k * cloud.steps], eps);
    for &k in seed_members {
        grid.entry(key(k)).or_default().push(k);
        is_member[k] = true;
        members.push(k);
    }
    for &k in order {
        if is_member[k] {
            continue;
        }
        let home = key(k);
        let mut ok = true;
        'scan: for off in 0..81usize {
            let mut nk = home;
            let mut o = off;
            for c in nk.iter_mut() {
                *c += (o % 3) as i64 - 1;
                o /= 3;
            }
            if let Some(list) = grid.get(&nk) {
                for &m in list {
                    if cloud.dn(k, m, n) <= eps {
                        ok = false;
                        break 'scan;
                    }
                }
            }
        }
        if ok {
            grid.entry(home).or_default().push(k);
            is_member[k] = true;
            members.push(k);
        }
    }
    members
}

/// Packings for each ε, largest first, each one extending the previous set
/// so that `s_n` is non-increasing in ε. Results follow the order of `eps`.
pub fn nested_packing(cloud: &CandidateCloud, n: usize, eps: &[f64], order: &[usize]) -> Vec<(f64, usize)> {
    let mut sorted: Vec<f64> = eps.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut members: Vec<usize> = Vec::new();
    let mut sizes = Vec::with_capacity(sorted.len());
    for &e in &sorted {
        members = greedy_packing(cloud, n, e, order, &members);
        sizes.push((e, members.len()));
    }
    eps.iter().map(|e| *sizes.iter().find(|(s, _)| s == e).unwrap()).collect()
}
