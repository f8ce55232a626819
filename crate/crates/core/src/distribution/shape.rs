use crate::series::NgnbParams;

/// Shape of the pmf and the resulting failure-rate monotonicity.
///
/// The ratio `p(y) p(y+2) / p(y+1)^2` equals
/// `((y + k + 1)(y + 1) / ((y + k)(y + 2)))^gamma`, and the base is below 1
/// exactly when `k > 1`. So for `k > 1` the sign of `gamma` decides
/// log-concavity (increasing failure rate) versus log-convexity
/// (decreasing failure rate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    LogConcaveIFR,
    LogConvexDFR,
    /// Geometric: `gamma = 0`, or `k = 1` where every binomial is 1.
    ConstantHazard,
    /// `k < 1` with `gamma != 0`, outside the `k > 1` characterization.
    Indeterminate,
}

pub fn classify_shape(params: &NgnbParams) -> ShapeClass {
    let (g, k) = (params.gamma(), params.k());
    if g == 0.0 || k == 1.0 {
        ShapeClass::ConstantHazard
    } else if k > 1.0 && g > 0.0 {
        ShapeClass::LogConcaveIFR
    } else if k > 1.0 {
        ShapeClass::LogConvexDFR
    } else {
        ShapeClass::Indeterminate
    }
}
