//! Connected-component labelling by breadth-first flood fill.

use std::collections::VecDeque;

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Components of the `true` pixels, ordered by their first pixel in raster
/// order. Each component lists its pixel indices in ascending order.
pub fn connected_components(mask: &Grid<bool>, conn: Connectivity) -> Vec<Vec<u32>> {
    let (w, h) = mask.dims();
    let offsets: &[(isize, isize)] = match conn {
        Connectivity::Four => &N4,
        Connectivity::Eight => &N8,
    };
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(i) = queue.pop_front() {
            comp.push(i as u32);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> Grid<bool> {
        let w = rows[0].len();
        let data = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect();
        Grid::from_vec(w, rows.len(), data)
    }

    #[test]
    fn diagonal_joins_only_with_eight() {
        let g = grid(&["#..", ".#.", "..#"]);
        assert_eq!(connected_components(&g, Connectivity::Eight).len(), 1);
        assert_eq!(connected_components(&g, Connectivity::Four).len(), 3);
    }

    #[test]
    fn ordered_by_first_pixel() {
        let g = grid(&["..##", "#...", "#..#"]);
        let c = connected_components(&g, Connectivity::Eight);
        assert_eq!(c, vec![vec![2, 3], vec![4, 8], vec![11]]);
    }
}
