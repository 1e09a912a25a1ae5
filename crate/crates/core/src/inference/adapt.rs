//! Warmup adaptation: dual-averaging step size and windowed diagonal metric.

#[derive(Debug, Clone)]
pub(crate) struct DualAveraging {
    delta: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    mu: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    pub fn new(delta: f64, initial_eps: f64) -> Self {
        Self {
            delta,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            mu: (10.0 * initial_eps).ln(),
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    pub fn restart(&mut self, eps: f64) {
        self.mu = (10.0 * eps).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Updates with the latest acceptance statistic and returns the next step size.
    pub fn learn(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let stat = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - stat);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn add(&mut self, q: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(q) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    fn variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2.iter().map(|s| s / (n - 1.0)).collect()
    }
}

/// Warmup window schedule: an initial fast buffer, doubling slow windows
/// for the metric, and a terminal fast buffer.
#[derive(Debug, Clone)]
pub(crate) struct MetricAdaptation {
    num_warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window: usize,
    counter: usize,
    estimator: Welford,
}

impl MetricAdaptation {
    pub const INIT_BUFFER: usize = 75;
    pub const BASE_WINDOW: usize = 25;
    pub const TERM_BUFFER: usize = 50;

    pub fn new(dim: usize, num_warmup: usize) -> Self {
        let (mut init, mut term, mut window) =
            (Self::INIT_BUFFER, Self::TERM_BUFFER, Self::BASE_WINDOW);
        if num_warmup < 20 {
            // too short for any metric window
            init = num_warmup;
            term = 0;
            window = 0;
        } else if init + term + window > num_warmup {
            init = (0.15 * num_warmup as f64) as usize;
            term = (0.1 * num_warmup as f64) as usize;
            window = num_warmup - (init + term);
        }
        Self {
            num_warmup,
            init_buffer: init,
            term_buffer: term,
            window_size: window,
            next_window: (init + window).saturating_sub(1),
            counter: 0,
            estimator: Welford::new(dim),
        }
    }

    fn in_window(&self) -> bool {
        self.window_size > 0
            && self.counter >= self.init_buffer
            && self.counter < self.num_warmup - self.term_buffer
            && self.counter != self.num_warmup
    }

    fn end_of_window(&self) -> bool {
        self.window_size > 0 && self.counter == self.next_window && self.counter != self.num_warmup
    }

    fn compute_next_window(&mut self) {
        let last = self.num_warmup - self.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last {
            let boundary = self.next_window + 2 * self.window_size;
            if boundary >= self.num_warmup - self.term_buffer {
                self.next_window = last;
            }
        }
    }

    /// Records a warmup position; returns an updated inverse metric at the
    /// end of a slow window.
    pub fn learn(&mut self, q: &[f64]) -> Option<Vec<f64>> {
        if self.in_window() {
            self.estimator.add(q);
        }
        if self.end_of_window() {
            self.compute_next_window();
            let n = self.estimator.n as f64;
            let var = self
                .estimator
                .variance()
                .into_iter()
                .map(|v| (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0)))
                .collect();
            self.estimator = Welford::new(q.len());
            self.counter += 1;
            return Some(var);
        }
        self.counter += 1;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_ends(num_warmup: usize) -> Vec<usize> {
        let mut a = MetricAdaptation::new(1, num_warmup);
        (0..num_warmup)
            .filter(|&i| a.learn(&[i as f64]).is_some())
            .collect()
    }

    #[test]
    fn default_schedule_windows() {
        // 75 + 25 + 50 + 100 + 200 + 500 (last stretched) + 50 = 1000
        assert_eq!(window_ends(1000), vec![99, 149, 249, 449, 949]);
        let ends = window_ends(2000);
        assert_eq!(*ends.last().unwrap(), 2000 - 50 - 1);
        assert_eq!(ends[0], 99);
    }

    #[test]
    fn short_warmup_uses_proportional_buffers() {
        let ends = window_ends(100);
        assert_eq!(ends, vec![89]);
        assert!(window_ends(10).is_empty());
    }

    #[test]
    fn dual_averaging_moves_toward_target() {
        let mut da = DualAveraging::new(0.8, 1.0);
        // accept stat always 1.0 -> step size should grow
        let mut eps = 1.0;
        for _ in 0..50 {
            eps = da.learn(1.0);
        }
        assert!(eps > 1.0);
        let mut da = DualAveraging::new(0.8, 1.0);
        for _ in 0..50 {
            eps = da.learn(0.1);
        }
        assert!(eps < 1.0);
    }
}
