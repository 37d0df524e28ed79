use nalgebra::DMatrix;

use crate::scalar::Real;

/// A smooth function on `n x p` matrices together with its Euclidean
/// gradient `G = DF(X)`.
///
/// Implementations must accept any matrix of the advertised shape; the
/// solver evaluates them only at feasible points.
pub trait Objective<T: Real> {
    /// `(n, p)`: the shape of the argument.
    fn dims(&self) -> (usize, usize);

    fn name(&self) -> &str {
        "objective"
    }

    fn value(&self, x: &DMatrix<T>) -> T;

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T>;

    fn value_and_gradient(&self, x: &DMatrix<T>) -> (T, DMatrix<T>) {
        (self.value(x), self.gradient(x))
    }
}

impl<T: Real, O: Objective<T> + ?Sized> Objective<T> for &O {
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }

    fn name(&self) -> &str {
        (**self).name()
    }

    fn value(&self, x: &DMatrix<T>) -> T {
        (**self).value(x)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        (**self).gradient(x)
    }

    fn value_and_gradient(&self, x: &DMatrix<T>) -> (T, DMatrix<T>) {
        (**self).value_and_gradient(x)
    }
}

/// Objective assembled from a pair of closures.
pub struct FnObjective<F, G> {
    dims: (usize, usize),
    name: String,
    value: F,
    gradient: G,
}

impl<F, G> FnObjective<F, G> {
    pub fn new(dims: (usize, usize), name: impl Into<String>, value: F, gradient: G) -> Self {
        Self {
            dims,
            name: name.into(),
            value,
            gradient,
        }
    }
}

impl<T, F, G> Objective<T> for FnObjective<F, G>
where
    T: Real,
    F: Fn(&DMatrix<T>) -> T,
    G: Fn(&DMatrix<T>) -> DMatrix<T>,
{
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x: &DMatrix<T>) -> T {
        (self.value)(x)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        (self.gradient)(x)
    }
}
