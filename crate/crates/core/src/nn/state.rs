use crate::frontier::FrontierPoint;
use crate::grid::{GridMap, Mask};

/// Side length of each network input channel.
pub const STATE_SIDE: usize = 50;
pub const STATE_CHANNELS: usize = 2;
pub const STATE_LEN: usize = STATE_CHANNELS * STATE_SIDE * STATE_SIDE;

/// Network input: channel 0 is the map window, channel 1 the temp-mask
/// window, both resized to 50×50.
#[derive(Clone, Debug, PartialEq)]
pub struct NetState {
    data: Vec<f32>,
}

impl NetState {
    pub fn from_vec(data: Vec<f32>) -> Option<Self> {
        (data.len() == STATE_LEN && data.iter().all(|v| (0.0..=1.0).contains(v)))
            .then_some(Self { data })
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, ch: usize) -> &[f32] {
        let plane = STATE_SIDE * STATE_SIDE;
        &self.data[ch * plane..(ch + 1) * plane]
    }
}

/// Crops the `d`×`d` windows of `map_view` and `temp_mask` centred at `fp`
/// (out-of-bounds cells read 0) and resizes them to 50×50 by nearest
/// neighbour.
pub fn extract_state(map_view: &GridMap, temp_mask: &Mask, fp: FrontierPoint, d: usize) -> NetState {
    assert!(d > 0, "window size must be positive");
    let half = (d / 2) as isize;
    let top = fp.row as isize - half;
    let left = fp.col as isize - half;
    // Nearest source index for each output index, sampling pixel centres.
    let src: Vec<isize> = (0..STATE_SIDE)
        .map(|i| ((2 * i + 1) * d / (2 * STATE_SIDE)) as isize)
        .collect();
    let mut data = Vec::with_capacity(STATE_LEN);
    for grid in [map_view.grid(), temp_mask.grid()] {
        for &sr in &src {
            for &sc in &src {
                data.push(grid.get_or(top + sr, left + sc, false) as u8 as f32);
            }
        }
    }
    NetState { data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn identity_resize_at_fifty() {
        let mut rng = rng_from_seed(3);
        let mut map = GridMap::new(100);
        let mut mask = Mask::new(100);
        for i in 0..100 * 100 {
            map.set_idx(i, rng.gen_bool(0.3));
            mask.set_idx(i, rng.gen_bool(0.6));
        }
        let s = extract_state(&map, &mask, Cell::new(50, 50), 50);
        for r in 0..50 {
            for c in 0..50 {
                let cell = Cell::new(25 + r, 25 + c);
                assert_eq!(s.channel(0)[r * 50 + c], map.get(cell) as u8 as f32);
                assert_eq!(s.channel(1)[r * 50 + c], mask.get(cell) as u8 as f32);
            }
        }
    }

    #[test]
    fn corner_window_is_padded() {
        let map = GridMap::from_grid(crate::grid::Grid::ones(60));
        let mask = Mask::from_grid(crate::grid::Grid::ones(60));
        let s = extract_state(&map, &mask, Cell::new(0, 0), 40);
        for ch in 0..2 {
            let plane = s.channel(ch);
            for r in 0..25 {
                for c in 0..25 {
                    assert_eq!(plane[r * 50 + c], 0.0);
                }
            }
            // Bottom-right quadrant is on the map.
            assert_eq!(plane[49 * 50 + 49], 1.0);
        }
    }

    #[test]
    fn values_are_binary() {
        let s = extract_state(&GridMap::new(20), &Mask::new(20), Cell::new(3, 17), 40);
        assert_eq!(s.as_slice().len(), STATE_LEN);
        assert!(NetState::from_vec(s.as_slice().to_vec()).is_some());
        assert!(NetState::from_vec(vec![2.0; STATE_LEN]).is_none());
    }
}
