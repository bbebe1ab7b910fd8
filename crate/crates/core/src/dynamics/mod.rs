//! Fixed points, stability, periodic orbits, Lyapunov exponents and
//! parameter scans.

mod bifurcation;
mod eigen;
mod fixed_points;
mod lyapunov;
mod map1d;
mod period;

pub use bifurcation::{bifurcation_scan, parameter_grid, BifurcationScan, ScanCell, ScanConfig};
pub use eigen::eigenvalues_small;
pub use fixed_points::{
    affine_hull, classify_fixed_point, find_fixed_points, AffineHull, Annotation, Classification, UNIT_CIRCLE_BAND,
    FixedPointConfig, FixedPointRecord, FixedPointSearch,
};
pub use lyapunov::{lyapunov_1d, lyapunov_operator, LyapunovEstimate};
pub use map1d::{Logistic, Map1D, QuadraticMap};
pub use period::{detect_period, detect_period_in_series, Period};
