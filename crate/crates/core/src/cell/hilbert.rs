//! Hilbert-curve lookup tables, 4 bits of i and j per step.

use std::sync::OnceLock;

pub const SWAP_MASK: u32 = 0x01;
pub const INVERT_MASK: u32 = 0x02;
pub const LOOKUP_BITS: u32 = 4;

/// For each orientation, the (i, j) quadrant (as `2i + j`) visited at each
/// Hilbert position.
pub const POS_TO_IJ: [[u32; 4]; 4] = [[0, 1, 3, 2], [0, 2, 3, 1], [3, 2, 0, 1], [3, 1, 0, 2]];

/// Orientation change applied when descending into each Hilbert position.
pub const POS_TO_ORIENTATION: [u32; 4] = [SWAP_MASK, 0, 0, SWAP_MASK | INVERT_MASK];

/// Inverse of `POS_TO_IJ`.
pub const IJ_TO_POS: [[u32; 4]; 4] = [[0, 1, 3, 2], [0, 3, 1, 2], [2, 3, 1, 0], [2, 1, 3, 0]];

const TABLE_SIZE: usize = 1 << (2 * LOOKUP_BITS + 2);

pub struct Tables {
    /// `(i4 << 6 | j4 << 2 | orientation)` → `(pos8 << 2 | orientation')`
    pub pos: [u16; TABLE_SIZE],
    /// `(pos8 << 2 | orientation)` → `(i4 << 6 | j4 << 2 | orientation')`
    pub ij: [u16; TABLE_SIZE],
}

pub fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = Tables {
            pos: [0; TABLE_SIZE],
            ij: [0; TABLE_SIZE],
        };
        for o in 0..4 {
            init_cell(&mut t, 0, 0, 0, o, 0, o);
        }
        t
    })
}

fn init_cell(t: &mut Tables, level: u32, i: u32, j: u32, orig: u32, pos: u32, orientation: u32) {
    if level == LOOKUP_BITS {
        let ij = (i << LOOKUP_BITS) + j;
        t.pos[((ij << 2) + orig) as usize] = ((pos << 2) + orientation) as u16;
        t.ij[((pos << 2) + orig) as usize] = ((ij << 2) + orientation) as u16;
        return;
    }
    let r = POS_TO_IJ[orientation as usize];
    for (k, &q) in r.iter().enumerate() {
        init_cell(
            t,
            level + 1,
            (i << 1) + (q >> 1),
            (j << 1) + (q & 1),
            orig,
            (pos << 2) + k as u32,
            orientation ^ POS_TO_ORIENTATION[k],
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_mutual_inverses() {
        let t = tables();
        for idx in 0..TABLE_SIZE {
            let orig = (idx & 3) as u16;
            let p = t.pos[idx];
            let back = t.ij[((p & !3) | orig) as usize];
            assert_eq!(back & !3, (idx as u16) & !3);
            assert_eq!(back & 3, p & 3);
        }
    }

    #[test]
    fn ij_to_pos_inverts_pos_to_ij() {
        for o in 0..4 {
            for pos in 0..4 {
                assert_eq!(IJ_TO_POS[o][POS_TO_IJ[o][pos] as usize] as usize, pos);
            }
        }
    }
}
