//! Direct two-dimensional Life simulator, kept independent of the graph
//! engine so the two can check each other.

use crate::graph::Boundary;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveGrid {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub alive: Vec<Vec<bool>>,
}

impl NaiveGrid {
    pub fn new(rows: usize, cols: usize, boundary: Boundary) -> Self {
        NaiveGrid {
            rows,
            cols,
            boundary,
            alive: vec![vec![false; cols]; rows],
        }
    }

    fn live_at(&self, r: isize, c: isize) -> bool {
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        match self.boundary {
            Boundary::Dead => {
                r >= 0 && r < rows && c >= 0 && c < cols && self.alive[r as usize][c as usize]
            }
            Boundary::Toroidal => {
                self.alive[r.rem_euclid(rows) as usize][c.rem_euclid(cols) as usize]
            }
        }
    }

    /// One B3/S23 generation. Toroidal grids are assumed to be at least 3x3.
    pub fn step(&self) -> NaiveGrid {
        let mut next = NaiveGrid::new(self.rows, self.cols, self.boundary);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let mut count = 0;
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        if (dr, dc) != (0, 0) && self.live_at(r as isize + dr, c as isize + dc) {
                            count += 1;
                        }
                    }
                }
                let alive = self.alive[r][c];
                next.alive[r][c] = count == 3 || (alive && count == 2);
            }
        }
        next
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.alive.iter().flatten().map(|&a| u8::from(a)).collect()
    }
}
