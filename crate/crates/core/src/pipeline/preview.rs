use std::sync::Arc;

use super::config::RenderSettings;
use super::dataset::DatasetEntry;
use super::execute::render_job;
use crate::error::{Error, Result};
use crate::image::{resize_bilinear, ImageBuffer, CHANNELS};
use crate::sampling::{derive_seed, TechniqueSpec};

pub const PREVIEW_CELL: usize = 128;
pub const PREVIEW_MAX_ROWS: usize = 8;

/// Contact sheet: one row per source (at most [`PREVIEW_MAX_ROWS`]), the
/// original in the first column followed by `count` augmented samples.
/// Samples use the same seeds a run with `seed` would.
pub fn preview_sheet(
    entries: &[DatasetEntry],
    spec: &TechniqueSpec,
    count: usize,
    seed: u64,
    render: &RenderSettings,
) -> Result<ImageBuffer> {
    if count == 0 {
        return Err(Error::invalid("preview count must be at least 1"));
    }
    if entries.is_empty() {
        return Err(Error::invalid("preview needs at least one image"));
    }
    let load = |pos: usize| -> Result<Arc<ImageBuffer>> {
        let img = ImageBuffer::load(&entries[pos].path)?;
        Ok(Arc::new(resize_bilinear(&img, render.size, render.size)?))
    };
    let rows = entries.len().min(PREVIEW_MAX_ROWS);
    let mut sheet = ImageBuffer::new((count + 1) * PREVIEW_CELL, rows * PREVIEW_CELL, 0)?;
    for (row, entry) in entries.iter().take(rows).enumerate() {
        let source = load(row)?;
        blit(&mut sheet, &thumbnail(&source)?, 0, row);
        for replicate in 0..count {
            let job_seed = derive_seed(
                seed,
                entry.source_index as u64,
                spec.technique(),
                replicate as u64,
            );
            let rendered = render_job(job_seed, spec, &source, entries, load, render)?;
            blit(&mut sheet, &thumbnail(&rendered.image)?, replicate + 1, row);
        }
    }
    Ok(sheet)
}

fn thumbnail(img: &ImageBuffer) -> Result<ImageBuffer> {
    resize_bilinear(img, PREVIEW_CELL, PREVIEW_CELL)
}

fn blit(sheet: &mut ImageBuffer, cell: &ImageBuffer, col: usize, row: usize) {
    let (x0, y0) = (col * PREVIEW_CELL, row * PREVIEW_CELL);
    let span = PREVIEW_CELL * CHANNELS;
    for y in 0..PREVIEW_CELL {
        let dst = sheet.offset(x0, y0 + y);
        let src = cell.offset(0, y);
        sheet.as_raw_mut()[dst..dst + span].copy_from_slice(&cell.as_raw()[src..src + span]);
    }
}
