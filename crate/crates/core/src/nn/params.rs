use alloc::vec::Vec;

use super::NnError;

/// Anything that owns trainable parameters.
///
/// Visiting order must be stable: the optimizer, checkpoints and the
/// gradient oracle all rely on the flattened order matching between a
/// network and its gradient holder.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64]));
}

pub fn param_count<P: Parameters + ?Sized>(p: &P) -> usize {
    let mut n = 0;
    p.visit(&mut |s| n += s.len());
    n
}

pub fn flatten<P: Parameters + ?Sized>(p: &P) -> Vec<f64> {
    let mut out = Vec::with_capacity(param_count(p));
    p.visit(&mut |s| out.extend_from_slice(s));
    out
}

/// Overwrites every parameter from `flat`, which must have exactly
/// [`param_count`] entries.
pub fn load_flat<P: Parameters + ?Sized>(p: &mut P, flat: &[f64]) -> Result<(), NnError> {
    super::check_len(param_count(p), flat.len())?;
    let mut offset = 0;
    p.visit_mut(&mut |s| {
        s.copy_from_slice(&flat[offset..offset + s.len()]);
        offset += s.len();
    });
    Ok(())
}

/// Clone with every parameter set to zero; used as a gradient accumulator.
pub fn zeros_like<P: Parameters + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.visit_mut(&mut |s| s.fill(0.0));
    z
}

impl<P: Parameters> Parameters for [P] {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for p in self {
            p.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for p in self {
            p.visit_mut(f);
        }
    }
}

impl<P: Parameters> Parameters for Vec<P> {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.as_slice().visit(f)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.as_mut_slice().visit_mut(f)
    }
}
