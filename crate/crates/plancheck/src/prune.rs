//! The pruning hierarchy and high/low decomposition of the square function.
//!
//! Scales run over a geometric ladder `R_k = R^(k eps)`; level-k pieces
//! `f^k_{tau_k}` arise by discarding, per tile, wave packets whose local
//! height exceeds `K^3 C^(N-k+1) beta / alpha`. The square pieces
//! `g_k = sum |f^{k+1}_{tau_k}|^2 * w_{tau_k^*}` split into low and high
//! parts by a smooth cutoff at the next scale, and the high sets Omega_k
//! peel off the region where g_k is large.

use crate::error::{Error, Result};
use crate::field::{Field, LatticeModel, Space};
use crate::packets::TilePartition;
use crate::weight::Weight;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub struct PruneParams {
    pub alpha: f64,
    pub beta: f64,
    /// the constant C of the pruning thresholds
    pub c: f64,
    /// the constant K of the pruning thresholds
    pub k: f64,
    /// number of ladder levels N (eps = 1/N)
    pub levels: usize,
    /// first retained level N_0
    pub n0: usize,
}

pub struct PruneLevel {
    /// ladder index k (width = M R_k^{-1/n})
    pub k: usize,
    /// block width in the angular parameter
    pub width: f64,
    /// t_lo of each tau at this level
    pub tau_lo: Vec<f64>,
    /// f^{k+1}_{tau_k}: the unpruned grouping of the level above
    pub f_next: Vec<Field>,
    /// f^k_{tau_k}: after pruning
    pub f_cur: Vec<Field>,
    /// g_k samples (real)
    pub g: Vec<f64>,
    pub g_low: Vec<f64>,
    /// Omega_k mask
    pub omega: Vec<bool>,
    /// per-tau count of pruned tiles
    pub pruned_tiles: Vec<usize>,
    /// per-tau sup of sum_T psi_T^(1/2) when pruning bit (1.0 otherwise);
    /// the reassembled sup bound carries this overlap factor
    pub psi_half_overlap: Vec<f64>,
}

pub struct PruneHierarchy {
    pub params: PruneParams,
    /// finest-level pieces f^N_theta (block projections)
    pub f_theta: Vec<Field>,
    pub theta_lo: Vec<f64>,
    /// levels k = N-1 down to N_0, in that order
    pub levels: Vec<PruneLevel>,
    /// low set mask
    pub low_set: Vec<bool>,
    /// U_alpha mask
    pub u_alpha: Vec<bool>,
    /// U_{alpha,beta} mask
    pub u_alpha_beta: Vec<bool>,
}

/// Dual-box target dimensions of a width-w block at angular position u:
/// bounding box of the frame-aligned dual plank in grid coordinates.
fn dual_target_dims(model: &LatticeModel, u: f64, width: f64) -> Vec<f64> {
    let n = model.n;
    let frame = crate::frame::frenet_frame(&model.curve, u.clamp(0.0, model.m), false);
    match frame {
        Ok(f) => {
            let mut dims = vec![0.0f64; n];
            for (j, e) in f.vectors.iter().enumerate() {
                // dual axis j has halfwidth width^-(j+1)
                let h = width.powi(-(j as i32 + 1));
                for (d, c) in dims.iter_mut().zip(e) {
                    *d += h * c.abs();
                }
            }
            dims.iter_mut().for_each(|d| *d = d.max(1e-9));
            dims
        }
        Err(_) => vec![1.0; n],
    }
}

/// The finest-level square function `sum_theta |f_theta|^2 * w_{theta*}`
/// used for the (alpha, beta) pigeonholing and the U_{alpha,beta} window.
pub fn finest_square_function(model: &LatticeModel, fhat: &Field) -> Vec<f64> {
    let n = model.n;
    let grid = &model.grid;
    let mut sq = vec![0.0f64; grid.len()];
    for b in 0..model.block_count() {
        let fb = model.project_block(fhat, b);
        let u = model.family.blocks[b].t_lo + 0.5;
        let mut g = Field::zeros(grid.clone(), Space::Physical);
        for (gv, v) in g.data.iter_mut().zip(&fb.data) {
            *gv = Complex64::new(v.norm_sqr(), 0.0);
        }
        let w = Weight {
            dim: n,
            frame: None,
            halfwidths: dual_target_dims(model, u, 1.0),
            center: vec![0.0; n],
        };
        g.convolve_weight(&w);
        g.to_physical();
        for (s, v) in sq.iter_mut().zip(&g.data) {
            *s += v.re.max(0.0);
        }
    }
    sq
}

/// Build the full pruning hierarchy for a field on a lattice model.
pub fn prune(model: &LatticeModel, fhat: &Field, params: PruneParams) -> Result<PruneHierarchy> {
    if params.levels < 2 || params.n0 + 1 > params.levels {
        return Err(Error::Invalid("need a geometric ladder with n0 < N".into()));
    }
    let n = model.n;
    let grid = &model.grid;

    // finest-level pieces
    let mut f_theta = Vec::with_capacity(model.block_count());
    let mut theta_lo = Vec::with_capacity(model.block_count());
    for b in 0..model.block_count() {
        f_theta.push(model.project_block(fhat, b));
        theta_lo.push(model.family.blocks[b].t_lo);
    }
    let mut f_full = Field::zeros(grid.clone(), Space::Physical);
    for fb in &f_theta {
        for (acc, v) in f_full.data.iter_mut().zip(&fb.data) {
            *acc += v;
        }
    }

    // U_alpha and U_{alpha,beta}
    let u_alpha: Vec<bool> = f_full.data.iter().map(|v| v.norm() >= params.alpha).collect();
    let sq = finest_square_function(model, fhat);
    let u_alpha_beta: Vec<bool> = u_alpha
        .iter()
        .zip(&sq)
        .map(|(ua, s)| *ua && *s >= params.beta / 2.0 && *s <= params.beta)
        .collect();

    // ladder: level k has width M R^{-k eps / n} = M^{1 - k/levels}
    let width_of = |k: usize| -> f64 {
        model.m * model.r.powf(-(k as f64) / (params.levels as f64 * n as f64))
    };

    // current pieces start at the finest level
    let mut cur_widths = 1.0f64;
    let mut cur_lo = theta_lo.clone();
    let mut cur_fields = f_theta.clone();
    let mut levels_out: Vec<PruneLevel> = Vec::new();

    for k in (params.n0..params.levels).rev() {
        let width = width_of(k);
        // tau positions at this level
        let lo_min = cur_lo.iter().cloned().fold(f64::INFINITY, f64::min);
        let lo_max = cur_lo.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + cur_widths;
        let first = (lo_min / width).floor() as i64;
        let last = ((lo_max / width).ceil() as i64).max(first + 1);
        let mut tau_lo = Vec::new();
        let mut f_next = Vec::new();
        for l in first..last {
            let lo = l as f64 * width;
            let kids: Vec<usize> = cur_lo
                .iter()
                .enumerate()
                .filter(|(_, t)| **t >= lo - 1e-9 && **t < lo + width - 1e-9)
                .map(|(i, _)| i)
                .collect();
            if kids.is_empty() {
                continue;
            }
            let mut f = Field::zeros(grid.clone(), Space::Physical);
            for kid in kids {
                for (acc, v) in f.data.iter_mut().zip(&cur_fields[kid].data) {
                    *acc += v;
                }
            }
            tau_lo.push(lo);
            f_next.push(f);
        }

        // prune each tau_k piece by tile heights
        let threshold = params.k.powi(3)
            * params.c.powf((params.levels - k + 1) as f64)
            * params.beta
            / params.alpha;
        let mut f_cur = Vec::with_capacity(f_next.len());
        let mut pruned_tiles = Vec::with_capacity(f_next.len());
        let mut psi_half_overlap = Vec::with_capacity(f_next.len());
        for (ti, f) in f_next.iter().enumerate() {
            let u = tau_lo[ti] + 0.5 * width;
            let dims = dual_target_dims(model, u, width.max(1.0 + 1e-9));
            let part = TilePartition::build(grid, &dims)?;
            let tiles = part.num_tiles();
            // per-tile sup of psi^(1/2) |f|
            let mut sup = vec![0.0f64; tiles];
            for (idx, v) in f.data.iter().enumerate() {
                let a = v.norm();
                if a == 0.0 {
                    continue;
                }
                for (t, s) in sup.iter_mut().enumerate() {
                    let p = part.psi(t, idx);
                    if p > 0.0 {
                        *s = s.max(p.sqrt() * a);
                    }
                }
            }
            let good: Vec<bool> = sup.iter().map(|s| *s <= threshold).collect();
            let removed = good.iter().filter(|g| !**g).count();
            let mut fp = Field::zeros(grid.clone(), Space::Physical);
            if removed == 0 {
                fp.data.clone_from(&f.data);
            } else {
                for (t, keep) in good.iter().enumerate() {
                    if !*keep {
                        continue;
                    }
                    for idx in 0..fp.data.len() {
                        let p = part.psi(t, idx);
                        if p != 0.0 {
                            fp.data[idx] += f.data[idx] * p;
                        }
                    }
                }
            }
            // the sup bound carries max_x sum_T psi_T^(1/2) in either case
            let mut worst: f64 = 0.0;
            for idx in 0..grid.len() {
                let mut acc = 0.0;
                for t in 0..tiles {
                    let p = part.psi(t, idx);
                    if p > 0.0 {
                        acc += p.sqrt();
                    }
                }
                worst = worst.max(acc);
            }
            psi_half_overlap.push(worst.max(1.0));
            pruned_tiles.push(removed);
            f_cur.push(fp);
        }

        // g_k = sum_tau |f^{k+1}_tau|^2 * w_{tau*}
        let mut g = vec![0.0f64; grid.len()];
        for (ti, f) in f_next.iter().enumerate() {
            let u = tau_lo[ti] + 0.5 * width;
            let dims = dual_target_dims(model, u, width.max(1.0 + 1e-9));
            let mut sq = Field::zeros(grid.clone(), Space::Physical);
            for (s, v) in sq.data.iter_mut().zip(&f.data) {
                *s = Complex64::new(v.norm_sqr(), 0.0);
            }
            let w = Weight { dim: n, frame: None, halfwidths: dims, center: vec![0.0; n] };
            sq.convolve_weight(&w);
            sq.to_physical();
            for (acc, v) in g.iter_mut().zip(&sq.data) {
                *acc += v.re.max(0.0);
            }
        }
        // low part: smooth cutoff at the next scale R_{k+1}^{-1/n} mapped
        // through the lattice dilation (per-axis scales M^{n+1-i} s)
        let s_cut = model.r.powf(-((k + 1) as f64) / (params.levels as f64 * n as f64));
        let scales: Vec<f64> = (1..=n)
            .map(|i| s_cut * model.m.powi((n + 1 - i) as i32))
            .collect();
        let mut gl = Field::zeros(grid.clone(), Space::Physical);
        for (s, v) in gl.data.iter_mut().zip(&g) {
            *s = Complex64::new(*v, 0.0);
        }
        gl.lowpass(&scales);
        gl.to_physical();
        let g_low: Vec<f64> = gl.data.iter().map(|c| c.re).collect();

        levels_out.push(PruneLevel {
            k,
            width,
            tau_lo,
            f_next,
            f_cur: f_cur.clone(),
            g,
            g_low,
            omega: vec![false; grid.len()],
            pruned_tiles,
            psi_half_overlap,
        });

        cur_widths = width;
        cur_lo = levels_out.last().unwrap().tau_lo.clone();
        cur_fields = f_cur;
    }

    // Omega_k and the low set: peel from the top level (k = N-1) down
    let mut claimed = vec![false; grid.len()];
    for lvl in levels_out.iter_mut() {
        let cexp = params.c.powf((params.levels - lvl.k) as f64);
        for idx in 0..claimed.len() {
            if !u_alpha_beta[idx] || claimed[idx] {
                continue;
            }
            if lvl.g[idx] >= cexp * params.beta {
                lvl.omega[idx] = true;
                claimed[idx] = true;
            }
        }
    }
    let low_set: Vec<bool> = u_alpha_beta
        .iter()
        .zip(&claimed)
        .map(|(u, c)| *u && !*c)
        .collect();

    Ok(PruneHierarchy {
        params,
        f_theta,
        theta_lo,
        levels: levels_out,
        low_set,
        u_alpha,
        u_alpha_beta,
    })
}

pub struct PruneChecks {
    /// max over levels/points of |f^k| - |f^{k+1}| (should be <= 0 within fp error)
    pub monotone_violation: f64,
    /// max over levels of ||f^k_tau||_inf / (bound * psi overlap)
    pub sup_bound_ratio: f64,
    /// fraction of Omega_k points with g_k <= 2 |g_k - g_k^low|
    pub high_dominance_fraction: f64,
    /// fraction of Omega_k points with pruning error <= alpha / (C^(1/2) K^3)
    pub pruning_error_fraction: f64,
    /// number of Omega points considered
    pub omega_points: usize,
    /// fraction of low-set points where the cumulative pruning error at the
    /// bottom level N_0 is within the same bound
    pub low_error_fraction: f64,
    pub low_points: usize,
}

/// Measure the hierarchy properties used by the high/low method.
pub fn check_hierarchy(h: &PruneHierarchy) -> PruneChecks {
    let mut monotone: f64 = f64::NEG_INFINITY;
    let mut sup_ratio: f64 = 0.0;
    let mut omega_pts = 0usize;
    let mut high_ok = 0usize;
    let mut prune_ok = 0usize;
    let bound_err = h.params.alpha / (h.params.c.sqrt() * h.params.k.powi(3));
    for lvl in &h.levels {
        let bound = h.params.k.powi(3)
            * h.params.c.powf((h.params.levels - lvl.k + 1) as f64)
            * h.params.beta
            / h.params.alpha;
        for (ti, (fc, fnx)) in lvl.f_cur.iter().zip(&lvl.f_next).enumerate() {
            let mut sup: f64 = 0.0;
            for (a, b) in fc.data.iter().zip(&fnx.data) {
                monotone = monotone.max(a.norm() - b.norm());
                sup = sup.max(a.norm());
            }
            sup_ratio = sup_ratio.max(sup / (bound * lvl.psi_half_overlap[ti]));
        }
        // pruning error |sum f^{k+1}_tau - sum f^k_tau| on Omega_k, and
        // high dominance g <= 2 |g - g_low|
        let mut err = vec![Complex64::default(); h.u_alpha.len()];
        for (fc, fnx) in lvl.f_cur.iter().zip(&lvl.f_next) {
            for (e, (a, b)) in err.iter_mut().zip(fnx.data.iter().zip(&fc.data)) {
                *e += a - b;
            }
        }
        for idx in 0..h.u_alpha.len() {
            if !lvl.omega[idx] {
                continue;
            }
            omega_pts += 1;
            let g = lvl.g[idx];
            let gh = g - lvl.g_low[idx];
            if g <= 2.0 * gh.abs() {
                high_ok += 1;
            }
            if err[idx].norm() <= bound_err {
                prune_ok += 1;
            }
        }
    }
    // low-set check: cumulative error between the original block sum and the
    // bottom-level pruned sum
    let mut low_pts = 0usize;
    let mut low_ok = 0usize;
    if let Some(bottom) = h.levels.last() {
        let len = h.u_alpha.len();
        let mut err = vec![Complex64::default(); len];
        for ft in &h.f_theta {
            for (e, v) in err.iter_mut().zip(&ft.data) {
                *e += v;
            }
        }
        for fc in &bottom.f_cur {
            for (e, v) in err.iter_mut().zip(&fc.data) {
                *e -= v;
            }
        }
        for idx in 0..len {
            if !h.low_set[idx] {
                continue;
            }
            low_pts += 1;
            if err[idx].norm() <= bound_err {
                low_ok += 1;
            }
        }
    }
    PruneChecks {
        monotone_violation: monotone,
        sup_bound_ratio: sup_ratio,
        high_dominance_fraction: if omega_pts == 0 {
            1.0
        } else {
            high_ok as f64 / omega_pts as f64
        },
        pruning_error_fraction: if omega_pts == 0 {
            1.0
        } else {
            prune_ok as f64 / omega_pts as f64
        },
        omega_points: omega_pts,
        low_error_fraction: if low_pts == 0 { 1.0 } else { low_ok as f64 / low_pts as f64 },
        low_points: low_pts,
    }
}

/// Spectral mass of each f^k_tau inside the widened block 3 tau (slab padded
/// by one width, caps tripled).
pub fn support_mass_in_3tau(
    model: &LatticeModel,
    lvl: &PruneLevel,
    tau_index: usize,
) -> f64 {
    let mut f = lvl.f_cur[tau_index].clone();
    f.to_frequency();
    let total: f64 = f.data.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 1.0;
    }
    let lo = lvl.tau_lo[tau_index] - lvl.width;
    let hi = lvl.tau_lo[tau_index] + 3.0 * lvl.width;
    let mut inside = 0.0;
    for idx in 0..f.data.len() {
        let m = f.data[idx].norm_sqr();
        if m == 0.0 {
            continue;
        }
        let xi = f.grid.frequency(idx);
        // slab test on the angular coordinate plus a generous cap check
        let c = xi[model.n - 1];
        if c >= lo && c < hi {
            inside += m;
        }
    }
    inside / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lattice_curve_model;
    use rand::SeedableRng;

    fn desk_model() -> LatticeModel {
        lattice_curve_model(2, 256.0, 1.0).unwrap()
    }

    fn desk_params(alpha: f64, beta: f64) -> PruneParams {
        PruneParams { alpha, beta, c: 8.0, k: 4.0, levels: 4, n0: 2 }
    }

    #[test]
    fn below_threshold_nothing_is_pruned() {
        let model = desk_model();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let fhat = model.random_field(&mut rng);
        // huge beta/alpha ratio: thresholds above any height
        let params = desk_params(1e-3, 1e3);
        let h = prune(&model, &fhat, params).unwrap();
        for lvl in &h.levels {
            assert!(lvl.pruned_tiles.iter().all(|p| *p == 0));
            for (a, b) in lvl.f_cur.iter().zip(&lvl.f_next) {
                let diff: f64 = a
                    .data
                    .iter()
                    .zip(&b.data)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum();
                assert!(diff < 1e-18);
            }
        }
    }

    #[test]
    fn pointwise_monotone_and_support() {
        let model = desk_model();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let fhat = model.random_field(&mut rng);
        let mut f = fhat.clone();
        f.to_physical();
        let alpha = 0.5 * f.linf_norm();
        let params = desk_params(alpha, alpha * alpha * 0.1);
        let h = prune(&model, &fhat, params).unwrap();
        let checks = check_hierarchy(&h);
        assert!(checks.monotone_violation <= 1e-9, "{}", checks.monotone_violation);
        for lvl in &h.levels {
            for ti in 0..lvl.f_cur.len() {
                let mass = support_mass_in_3tau(&model, lvl, ti);
                assert!(mass >= 1.0 - 1e-6, "tau {ti}: {mass}");
            }
        }
    }
}
