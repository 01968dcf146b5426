// SPDX-License-Identifier: Apache-2.0

//! Row-major 2D rasters shared by the grid, image and mask code.
//!
//! `x` is the column and `y` the row; linear index is `y * width + x`.

use std::ops::{Index, IndexMut};

use crate::error::{GuiderError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Real-valued raster (belief layers, probability images, depth).
pub type ScalarField = Field<f64>;

/// Binary raster; `true` is set.
pub type Mask = Field<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub fn new(x: usize, y: usize) -> Self {
        CellIndex { x, y }
    }
}

impl<T: Clone> Field<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Field {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Map every element into a new raster of the same shape.
    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> Field<U> {
        Field {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Combine two co-registered rasters element-wise.
    pub fn zip_map<U, V, F: FnMut(&T, &U) -> V>(&self, other: &Field<U>, mut f: F) -> Result<Field<V>> {
        self.check_same_shape(other)?;
        Ok(Field {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl<T> Field<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(GuiderError::Input(format!(
                "raster data has {} elements, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Field {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn cell_of(&self, index: usize) -> CellIndex {
        CellIndex {
            x: index % self.width,
            y: index / self.width,
        }
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    /// Checked lookup with signed coordinates.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<&T> {
        if self.in_bounds(x, y) {
            Some(&self.data[y as usize * self.width + x as usize])
        } else {
            None
        }
    }

    pub fn same_shape<U>(&self, other: &Field<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape<U>(&self, other: &Field<U>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(GuiderError::Input(format!(
                "raster shape mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }
}

impl<T> Index<CellIndex> for Field<T> {
    type Output = T;

    fn index(&self, c: CellIndex) -> &T {
        &self.data[c.y * self.width + c.x]
    }
}

impl<T> IndexMut<CellIndex> for Field<T> {
    fn index_mut(&mut self, c: CellIndex) -> &mut T {
        &mut self.data[c.y * self.width + c.x]
    }
}

impl<T> Index<usize> for Field<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Field<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Linear indices of set pixels, ascending.
    pub fn set_indices(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn from_indices(width: usize, height: usize, indices: &[usize]) -> Self {
        let mut m = Mask::filled(width, height, false);
        for &i in indices {
            m.data[i] = true;
        }
        m
    }

    pub fn or_assign(&mut self, other: &Mask) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.same_shape(other) && self.data.iter().zip(other.data.iter()).all(|(&a, &b)| !a || b)
    }
}

impl ScalarField {
    /// Value and location of the maximum; ties go to the lowest row-major index.
    pub fn argmax(&self) -> Option<(CellIndex, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.data.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, v)| (self.cell_of(i), v))
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.data.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}
