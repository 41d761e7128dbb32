//! Fixtures shared by the benchmarks.

use jumpform::{split, stable_like_kernel, AlphaFunction, GridFunction, JumpKernel, Point, SplitKernel};

pub fn tanh_kernel() -> JumpKernel {
    let af = AlphaFunction::tanh(1.0, 0.3, 1.0).expect("valid exponent");
    stable_like_kernel(&af, 1).expect("valid kernel")
}

pub fn tanh_split() -> SplitKernel {
    split(&tanh_kernel()).expect("nonnegative kernel")
}

pub fn bump(center: f64, radius: f64) -> GridFunction {
    GridFunction::bump(1, [center, 0.0], radius, 1.0, 4, 16).expect("valid bump")
}

pub fn line(n: usize, lo: f64, hi: f64) -> Vec<Point> {
    (0..n).map(|i| [lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64, 0.0]).collect()
}
