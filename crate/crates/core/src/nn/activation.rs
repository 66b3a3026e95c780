/// Element-wise activation applied after an affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
    /// Used to keep hypernetwork-generated mixing weights non-negative.
    /// Derivative is `sign(u)` with 0 at exactly 0.
    Abs,
    Elu,
}

impl Activation {
    #[inline]
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Activation::Identity => u,
            Activation::Relu => {
                if u > 0.0 {
                    u
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(u),
            Activation::Sigmoid => sigmoid(u),
            Activation::Abs => libm::fabs(u),
            Activation::Elu => {
                if u > 0.0 {
                    u
                } else {
                    libm::expm1(u)
                }
            }
        }
    }

    /// Derivative at pre-activation `u`, given the already computed output `y`.
    #[inline]
    pub fn derivative(self, u: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Abs => {
                if u > 0.0 {
                    1.0
                } else if u < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if u > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + libm::exp(-u))
    } else {
        let e = libm::exp(u);
        e / (1.0 + e)
    }
}
