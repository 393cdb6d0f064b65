use crate::grid::Grid;

/// A set of pixels of a `width x height` image, stored as sorted row-major
/// indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelSet {
    width: usize,
    height: usize,
    pixels: Vec<u32>,
}

impl PixelSet {
    pub fn empty(width: usize, height: usize) -> Self {
        PixelSet {
            width,
            height,
            pixels: Vec::new(),
        }
    }

    /// Sorts and deduplicates `pixels`.
    pub fn from_indices(width: usize, height: usize, mut pixels: Vec<u32>) -> Self {
        pixels.sort_unstable();
        pixels.dedup();
        debug_assert!(pixels.last().is_none_or(|&p| (p as usize) < width * height));
        PixelSet { width, height, pixels }
    }

    pub fn from_mask(mask: &Grid<bool>) -> Self {
        let pixels = mask
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u32)
            .collect();
        PixelSet {
            width: mask.width(),
            height: mask.height(),
            pixels,
        }
    }

    pub fn from_coords(width: usize, height: usize, coords: &[(usize, usize)]) -> Self {
        Self::from_indices(
            width,
            height,
            coords.iter().map(|&(x, y)| (y * width + x) as u32).collect(),
        )
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn indices(&self) -> &[u32] {
        &self.pixels
    }

    #[inline]
    pub fn contains(&self, index: u32) -> bool {
        self.pixels.binary_search(&index).is_ok()
    }

    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.pixels.iter().map(move |&i| (i as usize % w, i as usize / w))
    }

    pub fn is_subset_of(&self, other: &PixelSet) -> bool {
        self.pixels.iter().all(|&p| other.contains(p))
    }

    pub fn intersection_len(&self, other: &PixelSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.pixels.len() && j < other.pixels.len() {
            match self.pixels[i].cmp(&other.pixels[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn to_mask(&self) -> Grid<bool> {
        let mut g = Grid::filled(self.width, self.height, false);
        for &p in &self.pixels {
            g[p as usize] = true;
        }
        g
    }
}
