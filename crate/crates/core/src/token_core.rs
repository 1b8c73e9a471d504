//! Token maps, the four-group spatial partition, window tiling and the
//! stage-major coding order shared by the encoder, the decoder and the prior.
//!
//! Positions are split into four groups by coordinate parity:
//!
//! ```text
//!          j even   j odd
//! i even     0        2
//! i odd      3        1
//! ```
//!
//! Groups 0 and 1 form the `(i + j)` even checkerboard color and are coded
//! first; groups 2 and 3 are coded afterwards and see all four direct
//! neighbors. Contexts never reach outside the window tile that contains the
//! position being coded.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("window size {0} must be even and at least 2")]
    InvalidWindow(usize),
    #[error("token map dimensions must be at least 1x1, got {h}x{w}")]
    EmptyMap { h: usize, w: usize },
    #[error("alphabet size {0} outside supported range [2, {max}]", max = MAX_ALPHABET)]
    InvalidAlphabet(usize),
    #[error("token {token} at ({row}, {col}) is outside alphabet of size {k}")]
    TokenOutOfRange {
        row: usize,
        col: usize,
        token: usize,
        k: usize,
    },
}

/// Largest alphabet a token map can carry. Two `u16` codes above it are
/// reserved for the MASK and out-of-bounds context markers.
pub const MAX_ALPHABET: usize = 0xFFFD;

/// A single token-map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Token(u16),
    Mask,
}

impl Cell {
    pub fn token(self) -> Option<u16> {
        match self {
            Cell::Token(t) => Some(t),
            Cell::Mask => None,
        }
    }

    pub fn is_mask(self) -> bool {
        matches!(self, Cell::Mask)
    }
}

/// Row-major grid of token indices in `[0, k)`, with optional MASK cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMap {
    height: usize,
    width: usize,
    alphabet: usize,
    cells: Vec<Cell>,
}

impl TokenMap {
    /// A map with every cell set to MASK.
    pub fn masked(height: usize, width: usize, alphabet: usize) -> Result<Self, TokenError> {
        Self::check_shape(height, width, alphabet)?;
        Ok(Self {
            height,
            width,
            alphabet,
            cells: vec![Cell::Mask; height * width],
        })
    }

    pub fn filled(height: usize, width: usize, alphabet: usize, token: u16) -> Result<Self, TokenError> {
        Self::from_tokens(height, width, alphabet, vec![token; height * width])
    }

    pub fn from_tokens(
        height: usize,
        width: usize,
        alphabet: usize,
        tokens: Vec<u16>,
    ) -> Result<Self, TokenError> {
        Self::from_cells(height, width, alphabet, tokens.into_iter().map(Cell::Token).collect())
    }

    pub fn from_cells(
        height: usize,
        width: usize,
        alphabet: usize,
        cells: Vec<Cell>,
    ) -> Result<Self, TokenError> {
        Self::check_shape(height, width, alphabet)?;
        assert_eq!(cells.len(), height * width, "cell count must equal height * width");
        for (idx, cell) in cells.iter().enumerate() {
            if let Cell::Token(t) = *cell {
                if t as usize >= alphabet {
                    return Err(TokenError::TokenOutOfRange {
                        row: idx / width,
                        col: idx % width,
                        token: t as usize,
                        k: alphabet,
                    });
                }
            }
        }
        Ok(Self {
            height,
            width,
            alphabet,
            cells,
        })
    }

    fn check_shape(height: usize, width: usize, alphabet: usize) -> Result<(), TokenError> {
        if height == 0 || width == 0 {
            return Err(TokenError::EmptyMap { h: height, w: width });
        }
        if !(2..=MAX_ALPHABET).contains(&alphabet) {
            return Err(TokenError::InvalidAlphabet(alphabet));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, pos: Position) -> Cell {
        self.cells[pos.row * self.width + pos.col]
    }

    /// Panics if `cell` holds a token outside the alphabet.
    pub fn set(&mut self, pos: Position, cell: Cell) {
        if let Cell::Token(t) = cell {
            assert!((t as usize) < self.alphabet, "token {t} outside alphabet {}", self.alphabet);
        }
        self.cells[pos.row * self.width + pos.col] = cell;
    }

    pub fn has_mask(&self) -> bool {
        self.cells.iter().any(|c| c.is_mask())
    }

    /// Token values in row-major order, or `None` if any cell is MASK.
    pub fn tokens(&self) -> Option<Vec<u16>> {
        self.cells.iter().map(|c| c.token()).collect()
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| Position { row, col }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(u8);

impl GroupId {
    pub fn new(value: u8) -> Option<Self> {
        (value < 4).then_some(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Groups 0 and 1 are the anchor groups, always transmitted.
    pub fn is_anchor(self) -> bool {
        self.0 < 2
    }
}

pub fn group_of(row: usize, col: usize) -> GroupId {
    GroupId(match (row % 2, col % 2) {
        (0, 0) => 0,
        (1, 1) => 1,
        (0, 1) => 2,
        _ => 3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowRect {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl WindowRect {
    pub fn contains(&self, row: isize, col: isize) -> bool {
        row >= self.row0 as isize
            && col >= self.col0 as isize
            && row < (self.row0 + self.height) as isize
            && col < (self.col0 + self.width) as isize
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (self.row0..self.row0 + self.height)
            .flat_map(move |row| (self.col0..self.col0 + self.width).map(move |col| Position { row, col }))
    }
}

/// Non-overlapping `size x size` tiles in raster order; the last row and
/// column of tiles hold the remainders.
pub fn tile_windows(height: usize, width: usize, size: usize) -> Result<Vec<WindowRect>, TokenError> {
    if size < 2 || size % 2 != 0 {
        return Err(TokenError::InvalidWindow(size));
    }
    if height == 0 || width == 0 {
        return Err(TokenError::EmptyMap { h: height, w: width });
    }
    let mut windows = Vec::with_capacity(height.div_ceil(size) * width.div_ceil(size));
    for row0 in (0..height).step_by(size) {
        for col0 in (0..width).step_by(size) {
            windows.push(WindowRect {
                row0,
                col0,
                height: size.min(height - row0),
                width: size.min(width - col0),
            });
        }
    }
    Ok(windows)
}

/// Scan variant: the multi-stage order, or the plain raster baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanKind {
    MultiStage,
    Raster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderEntry {
    pub pos: Position,
    pub stage: u8,
    /// Index into [`CodingOrder::windows`].
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingOrder {
    pub windows: Vec<WindowRect>,
    pub entries: Vec<OrderEntry>,
}

impl CodingOrder {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OrderEntry, &WindowRect)> {
        self.entries.iter().map(|e| (e, &self.windows[e.window]))
    }
}

/// Stage-major order: for each stage, for each window in raster order, the
/// positions of that stage's group inside the window in raster order.
pub fn coding_order(height: usize, width: usize, size: usize) -> Result<CodingOrder, TokenError> {
    let windows = tile_windows(height, width, size)?;
    let mut entries = Vec::with_capacity(height * width);
    for stage in 0..4u8 {
        for (widx, window) in windows.iter().enumerate() {
            entries.extend(
                window
                    .positions()
                    .filter(|p| group_of(p.row, p.col).value() == stage)
                    .map(|pos| OrderEntry { pos, stage, window: widx }),
            );
        }
    }
    Ok(CodingOrder { windows, entries })
}

/// Window-by-window raster order with a single stage; the raster baseline.
pub fn raster_order(height: usize, width: usize, size: usize) -> Result<CodingOrder, TokenError> {
    let windows = tile_windows(height, width, size)?;
    let entries = windows
        .iter()
        .enumerate()
        .flat_map(|(widx, w)| w.positions().map(move |pos| OrderEntry { pos, stage: 0, window: widx }))
        .collect();
    Ok(CodingOrder { windows, entries })
}

pub fn scan_order(kind: ScanKind, height: usize, width: usize, size: usize) -> Result<CodingOrder, TokenError> {
    match kind {
        ScanKind::MultiStage => coding_order(height, width, size),
        ScanKind::Raster => raster_order(height, width, size),
    }
}

/// One slot of a context template, resolved against a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextSlot {
    At(Position),
    OutOfBounds,
}

/// Longest template arity over all stages and scan kinds.
pub const MAX_CONTEXT_SLOTS: usize = 6;

const STAGE0_TEMPLATE: &[(isize, isize)] = &[(0, -2), (-2, 0), (-2, -2), (-2, 2)];
const STAGE1_TEMPLATE: &[(isize, isize)] = &[(-1, -1), (-1, 1), (1, -1), (1, 1), (0, -2), (-2, 0)];
const STAGE23_TEMPLATE: &[(isize, isize)] = &[(0, -1), (-1, 0), (0, 1), (1, 0), (0, -2)];
const RASTER_TEMPLATE: &[(isize, isize)] = &[(0, -1), (-1, 0), (-1, -1), (-1, 1)];

/// Relative neighbor offsets, in slot order. Earlier slots are the ones kept
/// longest during backoff.
pub fn template(kind: ScanKind, stage: u8) -> &'static [(isize, isize)] {
    match (kind, stage) {
        (ScanKind::Raster, _) => RASTER_TEMPLATE,
        (ScanKind::MultiStage, 0) => STAGE0_TEMPLATE,
        (ScanKind::MultiStage, 1) => STAGE1_TEMPLATE,
        (ScanKind::MultiStage, 2 | 3) => STAGE23_TEMPLATE,
        (ScanKind::MultiStage, s) => panic!("invalid stage {s}"),
    }
}

pub fn stage_count(kind: ScanKind) -> u8 {
    match kind {
        ScanKind::MultiStage => 4,
        ScanKind::Raster => 1,
    }
}

/// Multi-stage context slots for `pos`, filtered to `window`.
pub fn context_positions(pos: Position, stage: u8, window: &WindowRect) -> Vec<ContextSlot> {
    context_positions_for(ScanKind::MultiStage, pos, stage, window)
}

pub fn context_positions_for(kind: ScanKind, pos: Position, stage: u8, window: &WindowRect) -> Vec<ContextSlot> {
    template(kind, stage)
        .iter()
        .map(|&(dr, dc)| {
            let row = pos.row as isize + dr;
            let col = pos.col as isize + dc;
            if window.contains(row, col) {
                ContextSlot::At(Position::new(row as usize, col as usize))
            } else {
                ContextSlot::OutOfBounds
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn group_assignment() {
        assert_eq!(group_of(0, 0).value(), 0);
        assert_eq!(group_of(1, 1).value(), 1);
        assert_eq!(group_of(0, 1).value(), 2);
        assert_eq!(group_of(1, 0).value(), 3);
        let mut counts = [0usize; 4];
        for i in 0..4 {
            for j in 0..4 {
                counts[group_of(i, j).value() as usize] += 1;
            }
        }
        assert_eq!(counts, [4, 4, 4, 4]);
    }

    #[test]
    fn partition_matches_parity() {
        for i in 0..64 {
            for j in 0..64 {
                let g = group_of(i, j);
                assert_eq!(g.is_anchor(), (i + j) % 2 == 0, "({i},{j})");
            }
        }
    }

    #[test]
    fn tiling_examples() {
        let one = tile_windows(18, 18, 18).unwrap();
        assert_eq!(one, vec![WindowRect { row0: 0, col0: 0, height: 18, width: 18 }]);

        let four = tile_windows(20, 20, 18).unwrap();
        let dims: Vec<_> = four.iter().map(|w| (w.height, w.width)).collect();
        assert_eq!(dims, vec![(18, 18), (18, 2), (2, 18), (2, 2)]);

        let strip = tile_windows(1, 5, 18).unwrap();
        assert_eq!(strip, vec![WindowRect { row0: 0, col0: 0, height: 1, width: 5 }]);
    }

    #[test]
    fn odd_window_rejected() {
        assert_eq!(tile_windows(4, 4, 17), Err(TokenError::InvalidWindow(17)));
        assert_eq!(tile_windows(4, 4, 0), Err(TokenError::InvalidWindow(0)));
        assert!(coding_order(4, 4, 3).is_err());
    }

    #[test]
    fn small_orders() {
        let expected = vec![
            (Position::new(0, 0), 0),
            (Position::new(1, 1), 1),
            (Position::new(0, 1), 2),
            (Position::new(1, 0), 3),
        ];
        for size in [2, 4] {
            let order = coding_order(2, 2, size).unwrap();
            let got: Vec<_> = order.entries.iter().map(|e| (e.pos, e.stage)).collect();
            assert_eq!(got, expected, "S={size}");
        }
    }

    #[test]
    fn four_by_four_order_starts_with_group_zero() {
        let order = coding_order(4, 4, 4).unwrap();
        assert_eq!(order.len(), 16);
        let head: Vec<_> = order.entries[..4].iter().map(|e| (e.pos.row, e.pos.col)).collect();
        assert_eq!(head, vec![(0, 0), (0, 2), (2, 0), (2, 2)]);
        let all: HashSet<_> = order.entries.iter().map(|e| e.pos).collect();
        assert_eq!(all.len(), 16);
    }

    #[test]
    fn context_examples() {
        let origin = WindowRect { row0: 0, col0: 0, height: 18, width: 18 };
        assert!(context_positions(Position::new(0, 0), 0, &origin)
            .iter()
            .all(|s| *s == ContextSlot::OutOfBounds));

        let slots = context_positions(Position::new(0, 1), 2, &origin);
        assert_eq!(
            slots,
            vec![
                ContextSlot::At(Position::new(0, 0)),
                ContextSlot::OutOfBounds,
                ContextSlot::At(Position::new(0, 2)),
                ContextSlot::At(Position::new(1, 1)),
                ContextSlot::OutOfBounds,
            ]
        );

        let slots = context_positions(Position::new(3, 3), 1, &origin);
        let expected: Vec<_> = [(2, 2), (2, 4), (4, 2), (4, 4), (3, 1), (1, 3)]
            .iter()
            .map(|&(r, c)| ContextSlot::At(Position::new(r, c)))
            .collect();
        assert_eq!(slots, expected);
    }

    #[test]
    fn context_respects_window_offset() {
        let window = WindowRect { row0: 18, col0: 18, height: 2, width: 2 };
        let slots = context_positions(Position::new(18, 19), 2, &window);
        assert_eq!(slots[0], ContextSlot::At(Position::new(18, 18)));
        assert_eq!(slots[1], ContextSlot::OutOfBounds);
        assert_eq!(slots[2], ContextSlot::OutOfBounds);
        assert_eq!(slots[3], ContextSlot::At(Position::new(19, 19)));
    }

    #[test]
    fn token_map_validation() {
        assert!(TokenMap::from_tokens(1, 2, 4, vec![0, 4]).is_err());
        assert!(TokenMap::masked(0, 2, 4).is_err());
        assert!(TokenMap::masked(2, 2, 1).is_err());
        let mut map = TokenMap::masked(2, 2, 4).unwrap();
        assert!(map.tokens().is_none());
        for p in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            map.set(Position::new(p.0, p.1), Cell::Token(3));
        }
        assert_eq!(map.tokens(), Some(vec![3; 4]));
    }
}
