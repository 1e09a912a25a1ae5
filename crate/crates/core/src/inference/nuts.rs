//! Multinomial no-U-turn transitions with a diagonal Euclidean metric.
//!
//! The tree is built by repeated doubling in a random direction. Subtrees
//! are checked with the generalized no-U-turn criterion on the sharp
//! momenta, including the two extra checks across merged subtrees.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LogDensity;

/// Energy error above which a trajectory is flagged divergent.
pub const MAX_DELTA_H: f64 = 1000.0;

#[derive(Debug, Clone)]
pub(crate) struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl PhasePoint {
    pub fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let logp = target.logp_grad(&q, &mut grad);
        Self {
            p: vec![0.0; q.len()],
            q,
            grad,
            logp,
        }
    }

    fn kinetic(&self, inv_metric: &[f64]) -> f64 {
        0.5 * self
            .p
            .iter()
            .zip(inv_metric)
            .map(|(p, m)| p * p * m)
            .sum::<f64>()
    }

    pub fn hamiltonian(&self, inv_metric: &[f64]) -> f64 {
        let h = -self.logp + self.kinetic(inv_metric);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn sharp(&self, inv_metric: &[f64]) -> Vec<f64> {
        self.p.iter().zip(inv_metric).map(|(p, m)| p * m).collect()
    }

    pub fn resample_momentum<R: Rng + ?Sized>(&mut self, inv_metric: &[f64], rng: &mut R) {
        for (p, m) in self.p.iter_mut().zip(inv_metric) {
            let z: f64 = StandardNormal.sample(rng);
            *p = z / m.sqrt();
        }
    }
}

/// One leapfrog step of size `eps` (negative integrates backwards).
pub(crate) fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    z: &mut PhasePoint,
    inv_metric: &[f64],
    eps: f64,
) {
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
    for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(inv_metric) {
        *q += eps * m * p;
    }
    z.logp = target.logp_grad(&z.q, &mut z.grad);
    if !z.logp.is_finite() {
        return;
    }
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TransitionStats {
    pub accept_stat: f64,
    pub tree_depth: u32,
    pub n_leapfrog: u32,
    pub divergent: bool,
    pub energy: f64,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

struct Tree<'a, T: ?Sized, R: ?Sized> {
    target: &'a T,
    inv_metric: &'a [f64],
    eps: f64,
    h0: f64,
    rng: &'a mut R,
    n_leapfrog: u32,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity + ?Sized, R: Rng + ?Sized> Tree<'_, T, R> {
    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        z: &mut PhasePoint,
        depth: u32,
        sign: f64,
        z_propose: &mut PhasePoint,
        p_sharp_beg: &mut Vec<f64>,
        p_sharp_end: &mut Vec<f64>,
        rho: &mut Vec<f64>,
        p_beg: &mut Vec<f64>,
        p_end: &mut Vec<f64>,
        log_sum_weight: &mut f64,
    ) -> bool {
        let dim = z.q.len();
        if depth == 0 {
            leapfrog(self.target, z, self.inv_metric, sign * self.eps);
            self.n_leapfrog += 1;
            let h = z.hamiltonian(self.inv_metric);
            if h - self.h0 > MAX_DELTA_H {
                self.divergent = true;
            }
            let w = self.h0 - h;
            *log_sum_weight = log_sum_exp(*log_sum_weight, w);
            self.sum_metro_prob += if w > 0.0 { 1.0 } else { w.exp() };
            z_propose.clone_from(z);
            *p_sharp_beg = z.sharp(self.inv_metric);
            p_sharp_end.clone_from(p_sharp_beg);
            for (r, p) in rho.iter_mut().zip(&z.p) {
                *r += p;
            }
            p_beg.clone_from(&z.p);
            p_end.clone_from(p_beg);
            return !self.divergent;
        }

        let mut lsw_init = f64::NEG_INFINITY;
        let mut p_init_end = vec![0.0; dim];
        let mut p_sharp_init_end = vec![0.0; dim];
        let mut rho_init = vec![0.0; dim];
        if !self.build(
            z,
            depth - 1,
            sign,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            &mut lsw_init,
        ) {
            return false;
        }

        let mut z_propose_final = z.clone();
        let mut lsw_final = f64::NEG_INFINITY;
        let mut p_final_beg = vec![0.0; dim];
        let mut p_sharp_final_beg = vec![0.0; dim];
        let mut rho_final = vec![0.0; dim];
        if !self.build(
            z,
            depth - 1,
            sign,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            &mut lsw_final,
        ) {
            return false;
        }

        let lsw_subtree = log_sum_exp(lsw_init, lsw_final);
        *log_sum_weight = log_sum_exp(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree {
            *z_propose = z_propose_final;
        } else {
            let accept = (lsw_final - lsw_subtree).exp();
            if self.rng.random::<f64>() < accept {
                *z_propose = z_propose_final;
            }
        }

        let rho_subtree = add(&rho_init, &rho_final);
        for (r, s) in rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }
        let mut persist = no_u_turn(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_ext = add(&rho_init, &p_final_beg);
        persist &= no_u_turn(p_sharp_beg, &p_sharp_final_beg, &rho_ext);
        let rho_ext = add(&rho_final, &p_init_end);
        persist &= no_u_turn(&p_sharp_init_end, p_sharp_end, &rho_ext);
        persist
    }
}

/// One NUTS transition from `current`, which is replaced by the new state.
pub(crate) fn transition<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &mut PhasePoint,
    inv_metric: &[f64],
    eps: f64,
    max_depth: u32,
    rng: &mut R,
) -> TransitionStats {
    let dim = current.q.len();
    current.resample_momentum(inv_metric, rng);

    let mut z_fwd = current.clone();
    let mut z_bck = current.clone();
    let mut z_sample = current.clone();
    let mut z_propose = current.clone();

    let p0_sharp = current.sharp(inv_metric);
    let mut p_fwd_fwd = current.p.clone();
    let mut p_sharp_fwd_fwd = p0_sharp.clone();
    let mut p_fwd_bck = current.p.clone();
    let mut p_sharp_fwd_bck = p0_sharp.clone();
    let mut p_bck_fwd = current.p.clone();
    let mut p_sharp_bck_fwd = p0_sharp.clone();
    let mut p_bck_bck = current.p.clone();
    let mut p_sharp_bck_bck = p0_sharp;

    let mut rho = current.p.clone();
    let mut log_sum_weight = 0.0;
    let h0 = current.hamiltonian(inv_metric);

    let mut depth = 0;
    let mut tree = Tree {
        target,
        inv_metric,
        eps,
        h0,
        rng,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };

    while depth < max_depth {
        let mut rho_fwd = vec![0.0; dim];
        let mut rho_bck = vec![0.0; dim];
        let mut lsw_subtree = f64::NEG_INFINITY;

        let valid = if tree.rng.random::<f64>() > 0.5 {
            let mut z = z_fwd.clone();
            rho_bck.clone_from(&rho);
            p_bck_fwd.clone_from(&p_fwd_bck);
            p_sharp_bck_fwd.clone_from(&p_sharp_fwd_bck);
            let ok = tree.build(
                &mut z,
                depth,
                1.0,
                &mut z_propose,
                &mut p_sharp_fwd_bck,
                &mut p_sharp_fwd_fwd,
                &mut rho_fwd,
                &mut p_fwd_bck,
                &mut p_fwd_fwd,
                &mut lsw_subtree,
            );
            z_fwd = z;
            ok
        } else {
            let mut z = z_bck.clone();
            rho_fwd.clone_from(&rho);
            p_fwd_bck.clone_from(&p_bck_fwd);
            p_sharp_fwd_bck.clone_from(&p_sharp_bck_fwd);
            let ok = tree.build(
                &mut z,
                depth,
                -1.0,
                &mut z_propose,
                &mut p_sharp_bck_fwd,
                &mut p_sharp_bck_bck,
                &mut rho_bck,
                &mut p_bck_fwd,
                &mut p_bck_bck,
                &mut lsw_subtree,
            );
            z_bck = z;
            ok
        };
        if !valid {
            break;
        }
        depth += 1;

        if lsw_subtree > log_sum_weight {
            z_sample.clone_from(&z_propose);
        } else {
            let accept = (lsw_subtree - log_sum_weight).exp();
            if tree.rng.random::<f64>() < accept {
                z_sample.clone_from(&z_propose);
            }
        }
        log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
        let rho_ext = add(&rho_bck, &p_fwd_bck);
        persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_ext);
        let rho_ext = add(&rho_fwd, &p_bck_fwd);
        persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_ext);
        if !persist {
            break;
        }
    }

    let n_leapfrog = tree.n_leapfrog;
    let accept_stat = if n_leapfrog > 0 {
        tree.sum_metro_prob / n_leapfrog as f64
    } else {
        0.0
    };
    let divergent = tree.divergent;
    let energy = z_sample.hamiltonian(inv_metric);
    *current = z_sample;
    TransitionStats {
        accept_stat,
        tree_depth: depth,
        n_leapfrog,
        divergent,
        energy,
    }
}

/// Mean absolute energy error over `trajectories` fixed-length leapfrog
/// paths of `steps` steps from `q0`, with unit metric.
pub fn mean_energy_error<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    q0: &[f64],
    eps: f64,
    steps: usize,
    trajectories: usize,
    rng: &mut R,
) -> f64 {
    let inv_metric = vec![1.0; q0.len()];
    let mut total = 0.0;
    for _ in 0..trajectories {
        let mut z = PhasePoint::new(target, q0.to_vec());
        z.resample_momentum(&inv_metric, rng);
        let h0 = z.hamiltonian(&inv_metric);
        for _ in 0..steps {
            leapfrog(target, &mut z, &inv_metric, eps);
        }
        total += (z.hamiltonian(&inv_metric) - h0).abs();
    }
    total / trajectories as f64
}
