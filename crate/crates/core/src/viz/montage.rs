use super::VizError;
use crate::patchio::{Label, Patch};

/// Row-major grid of equally sized patches; a short last row is filled
/// with black tiles. The result keeps the patches' label when they all
/// agree and is unlabeled otherwise.
pub fn montage(patches: &[Patch], columns: usize) -> Result<Patch, VizError> {
    if columns == 0 {
        return Err(VizError::ZeroColumns);
    }
    let first = patches.first().ok_or(VizError::Empty)?;
    let (tw, th) = (first.width(), first.height());
    for (index, p) in patches.iter().enumerate() {
        if (p.width(), p.height()) != (tw, th) {
            return Err(VizError::PatchSize { index, expected: (tw, th), found: (p.width(), p.height()) });
        }
    }
    let rows = patches.len().div_ceil(columns);
    let (w, h) = (tw * columns, th * rows);
    let mut pixels = vec![0.0; w * h];
    for (k, p) in patches.iter().enumerate() {
        let (r, c) = (k / columns, k % columns);
        for i in 0..th {
            let dst = (r * th + i) * w + c * tw;
            pixels[dst..dst + tw].copy_from_slice(&p.pixels()[i * tw..(i + 1) * tw]);
        }
    }
    let label = if patches.iter().all(|p| p.label() == first.label()) { first.label() } else { Label::Unlabeled };
    Ok(Patch::new(w, h, pixels, label).expect("tiles hold valid pixels"))
}
