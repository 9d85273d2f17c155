use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating-point scalar usable by the generic symplectic kernels.
pub trait Scalar: RealField + Copy + ToPrimitive + Send + Sync + 'static {
    /// Machine epsilon of the type.
    const EPS: f64;

    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EPS: f64 = f64::EPSILON;
    fn lit(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    const EPS: f64 = f32::EPSILON as f64;
    fn lit(x: f64) -> Self {
        x as f32
    }
}
