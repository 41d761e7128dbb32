//! Gauss–Legendre nodes and weights on `[-1, 1]`.

use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    rule: Arc<Vec<(f64, f64)>>,
}

type Rule = Arc<Vec<(f64, f64)>>;

fn cache() -> &'static Mutex<Vec<Option<Rule>>> {
    static CACHE: OnceLock<Mutex<Vec<Option<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

impl GaussLegendre {
    /// `n`-point rule, computed by Newton iteration on the Legendre
    /// recurrence and cached per `n`.
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        let mut guard = cache().lock().expect("gauss cache poisoned");
        if guard.len() <= n {
            guard.resize(n + 1, None);
        }
        if let Some(rule) = &guard[n] {
            return Self { rule: rule.clone() };
        }
        let rule = Arc::new(compute(n));
        guard[n] = Some(rule.clone());
        Self { rule }
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rule.iter().copied()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.rule.iter().map(move |&(t, w)| (mid + half * t, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn compute(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=24 {
            let s: f64 = GaussLegendre::new(n).iter().map(|(_, w)| w).sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        let gl = GaussLegendre::new(6);
        for p in 0..12 {
            let got = gl.integrate(0.0, 1.0, |x| x.powi(p));
            assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn smooth_integrand() {
        let gl = GaussLegendre::new(12);
        let got = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((got - 2.0).abs() < 1e-13);
    }
}
