use super::{Label, Patch, PatchError, Result};

pub const DEFAULT_PATCH_SIZE: usize = 128;

/// Origin of a `size`-long window nominally centred on `center`, shifted
/// so the window stays inside `0..extent`.
fn window_start(center: i64, size: usize, extent: usize) -> usize {
    let start = center - (size / 2) as i64;
    start.clamp(0, (extent - size) as i64) as usize
}

/// Crops a `size`×`size` window centred on `(x, y)` (column, row). Windows
/// that would cross the border are translated back inside the image rather
/// than padded.
pub fn extract_patch(image: &Patch, center: (i64, i64), size: usize, label: Label) -> Result<Patch> {
    if size == 0 {
        return Err(PatchError::Config("patch size must be positive".into()));
    }
    let (w, h) = (image.width(), image.height());
    if w < size || h < size {
        return Err(PatchError::TooSmall { width: w, height: h, size });
    }
    let (x, y) = center;
    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
        return Err(PatchError::CenterOutside { x, y, width: w, height: h });
    }
    let col0 = window_start(x, size, w);
    let row0 = window_start(y, size, h);
    let mut pixels = Vec::with_capacity(size * size);
    for row in row0..row0 + size {
        let start = row * w + col0;
        pixels.extend_from_slice(&image.pixels()[start..start + size]);
    }
    Patch::new(size, size, pixels, label)
}
