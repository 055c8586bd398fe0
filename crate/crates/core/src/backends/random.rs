use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PolicyBackend, RolloutGroup};
use crate::error::RolloutError;
use crate::geometry::BBox;
use crate::layout::{Canvas, Layout};
use crate::protocol::format_response;

/// ChaCha stream id for a canvas: 64-bit FNV-1a of its id.
pub fn canvas_stream(canvas_id: &str) -> u64 {
    canvas_id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Well-formed responses with uniformly placed in-canvas boxes.
///
/// Each canvas draws from its own ChaCha8 stream keyed by `(seed, canvas id)`,
/// so a group does not depend on which canvases were sampled before it.
#[derive(Debug, Clone)]
pub struct RandomBackend {
    seed: u64,
}

impl RandomBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng_for(&self, canvas_id: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(canvas_stream(canvas_id));
        rng
    }

    pub fn sample_layout(rng: &mut ChaCha8Rng, canvas: &Canvas) -> Layout {
        let (cw, ch) = (canvas.width, canvas.height);
        Layout::from_boxes(
            Some(canvas.id.clone()),
            canvas.manifest.iter().map(|&category| {
                let w = rng.random_range(0.05..0.5) * cw;
                let h = rng.random_range(0.03..0.25) * ch;
                let x = rng.random_range(0.0..=1.0) * (cw - w);
                let y = rng.random_range(0.0..=1.0) * (ch - h);
                (category, BBox::new(x, y, w, h))
            }),
        )
    }
}

impl PolicyBackend for RandomBackend {
    fn rollout(&self, canvas: &Canvas, _template: &str, group_size: usize) -> Result<RolloutGroup, RolloutError> {
        let mut rng = self.rng_for(&canvas.id);
        let raws = (0..group_size).map(|i| {
            let layout = Self::sample_layout(&mut rng, canvas);
            format_response(&format!("random placement #{i}"), &layout)
        });
        Ok(RolloutGroup::from_raw(canvas.id.clone(), raws.collect::<Vec<_>>()))
    }
}
