//! One `x_i`–`y` plane stored as a memristor crossbar.
//!
//! Rows are indexed by output bin (row 0 holds the lowest `y`), columns by
//! input bin. Indices are 0-based throughout the crate. While ink is being
//! dropped, every column wire is chained to its neighbours through a
//! coupling resistor, and likewise every row wire; the resulting resistive
//! network is solved by nodal analysis.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};

use crate::device::{self, DeviceParams, DeviceState};
use crate::error::{Axis, Error, Result};

/// Uniform binning of a closed interval into `bins` cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    lo: f64,
    hi: f64,
    bins: usize,
}

impl Quantizer {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParam(format!(
                "quantizer range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if bins < 2 {
            return Err(Error::InvalidParam(format!(
                "quantizer needs at least 2 bins, got {bins}"
            )));
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// 0-based bin of `v`; the upper edge belongs to the last bin.
    pub fn quantize(&self, v: f64, axis: Axis) -> Result<usize> {
        if !(self.lo..=self.hi).contains(&v) {
            return Err(Error::OutOfRange {
                axis,
                value: v,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let cell = ((v - self.lo) / (self.hi - self.lo) * self.bins as f64).floor() as usize;
        Ok(cell.min(self.bins - 1))
    }

    /// Centre of (possibly fractional) bin position `bin`.
    pub fn midpoint(&self, bin: f64) -> f64 {
        self.lo + (bin + 0.5) * self.width()
    }
}

/// Voltages applied while dropping ink: one column driven, one row grounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivePattern {
    pub col: usize,
    pub row: usize,
    pub v_drive: f64,
    /// Connects the neighbour-coupling resistor chains.
    pub coupling_on: bool,
}

/// Nodal-analysis result for one [`DrivePattern`].
#[derive(Clone, Debug)]
pub struct NetworkSolution {
    pub col_voltages: Vec<f64>,
    pub row_voltages: Vec<f64>,
    /// `rows × cols`; positive entries flow from the row wire into the column wire.
    pub currents: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    rows: usize,
    cols: usize,
    params: DeviceParams,
    states: Vec<DeviceState>,
    r_couple: f64,
    x_quant: Quantizer,
    y_quant: Quantizer,
    rectified: bool,
}

impl Plane {
    /// Fresh plane with every device at `r_off`. The grid size is taken from
    /// the quantizers: `y_quant.bins()` rows by `x_quant.bins()` columns.
    pub fn new(
        params: DeviceParams,
        r_couple: f64,
        x_quant: Quantizer,
        y_quant: Quantizer,
    ) -> Result<Self> {
        params.validate()?;
        if !(r_couple > 0.0 && r_couple.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "coupling resistance must be positive, got {r_couple}"
            )));
        }
        let rows = y_quant.bins();
        let cols = x_quant.bins();
        Ok(Self {
            rows,
            cols,
            params,
            states: vec![DeviceState::PRISTINE; rows * cols],
            r_couple,
            x_quant,
            y_quant,
            rectified: false,
        })
    }

    /// Enables ideal per-junction rectification during ink dropping.
    pub fn with_rectification(mut self, on: bool) -> Self {
        self.rectified = on;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn r_couple(&self) -> f64 {
        self.r_couple
    }

    pub fn x_quant(&self) -> &Quantizer {
        &self.x_quant
    }

    pub fn y_quant(&self) -> &Quantizer {
        &self.y_quant
    }

    pub fn is_rectified(&self) -> bool {
        self.rectified
    }

    pub fn col_of(&self, x: f64) -> Result<usize> {
        self.x_quant.quantize(x, Axis::X)
    }

    pub fn row_of(&self, y: f64) -> Result<usize> {
        self.y_quant.quantize(y, Axis::Y)
    }

    #[inline]
    pub fn state(&self, row: usize, col: usize) -> DeviceState {
        self.states[row * self.cols + col]
    }

    pub fn set_state(&mut self, row: usize, col: usize, state: DeviceState) -> Result<()> {
        self.check_cell(row, col)?;
        if state.w() > self.params.d {
            return Err(Error::InvalidParam(format!(
                "state w={} exceeds film length {}",
                state.w(),
                self.params.d
            )));
        }
        self.states[row * self.cols + col] = state;
        Ok(())
    }

    /// Row-major device states.
    pub fn states(&self) -> &[DeviceState] {
        &self.states
    }

    pub(crate) fn states_mut(&mut self) -> &mut [DeviceState] {
        &mut self.states
    }

    #[inline]
    pub fn memristance(&self, row: usize, col: usize) -> f64 {
        device::memristance(&self.params, self.state(row, col))
    }

    #[inline]
    pub fn delta_r(&self, row: usize, col: usize) -> f64 {
        device::delta_r(&self.params, self.state(row, col))
    }

    /// Stored ink of one column, bottom row first.
    pub fn delta_r_column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.delta_r(i, col)).collect()
    }

    /// `rows × cols` matrix of stored ink.
    pub fn total_delta_r(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.delta_r(i, j))
    }

    pub fn max_delta_r(&self) -> f64 {
        self.states
            .iter()
            .map(|s| device::delta_r(&self.params, *s))
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_cell(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows {
            return Err(Error::Index {
                what: "rows",
                index: row,
                len: self.rows,
            });
        }
        if col >= self.cols {
            return Err(Error::Index {
                what: "columns",
                index: col,
                len: self.cols,
            });
        }
        Ok(())
    }

    /// Solves the crossbar under `drive`.
    ///
    /// Column `drive.col` is held at `drive.v_drive`, row `drive.row` at 0 V,
    /// every other wire floats. With rectification enabled, junctions whose
    /// current opposes the drop direction are opened and the network is
    /// re-solved until no such current remains.
    pub fn solve_network(&self, drive: &DrivePattern) -> Result<NetworkSolution> {
        self.check_cell(drive.row, drive.col)?;
        if !drive.v_drive.is_finite() {
            return Err(Error::InvalidParam("drive voltage must be finite".into()));
        }
        let mut open = vec![false; self.rows * self.cols];
        let forward = -drive.v_drive.signum();
        loop {
            let sol = self.solve_linear(drive, &open)?;
            if !self.rectified || forward == 0.0 {
                return Ok(sol);
            }
            let mut changed = false;
            for (k, blocked) in open.iter_mut().enumerate() {
                let (i, j) = (k / self.cols, k % self.cols);
                if !*blocked && sol.currents[(i, j)] * forward < 0.0 {
                    *blocked = true;
                    changed = true;
                }
            }
            if !changed {
                return Ok(sol);
            }
        }
    }

    fn solve_linear(&self, drive: &DrivePattern, open: &[bool]) -> Result<NetworkSolution> {
        let (m, n) = (self.rows, self.cols);
        let nodes = m + n;
        let row_node = |i: usize| n + i;
        let g_couple = if drive.coupling_on {
            1.0 / self.r_couple
        } else {
            0.0
        };

        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(m * n + nodes);
        for i in 0..m {
            for j in 0..n {
                if !open[i * n + j] {
                    edges.push((j, row_node(i), 1.0 / self.memristance(i, j)));
                }
            }
        }
        if g_couple > 0.0 {
            for j in 1..n {
                edges.push((j - 1, j, g_couple));
            }
            for i in 1..m {
                edges.push((row_node(i - 1), row_node(i), g_couple));
            }
        }

        let mut fixed: Vec<Option<f64>> = vec![None; nodes];
        fixed[drive.col] = Some(drive.v_drive);
        fixed[row_node(drive.row)] = Some(0.0);

        // Free nodes cut off from both sources carry no current; they are
        // left out of the system and reported at 0 V.
        let reachable = reachable_from_fixed(nodes, &edges, &fixed);
        let mut slot = vec![usize::MAX; nodes];
        let mut free = 0;
        for v in 0..nodes {
            if fixed[v].is_none() && reachable[v] {
                slot[v] = free;
                free += 1;
            }
        }

        let mut a = DMatrix::<f64>::zeros(free, free);
        let mut b = DVector::<f64>::zeros(free);
        for &(p, q, g) in &edges {
            for (u, v) in [(p, q), (q, p)] {
                let su = slot[u];
                if su == usize::MAX {
                    continue;
                }
                a[(su, su)] += g;
                match fixed[v] {
                    Some(volt) => b[su] += g * volt,
                    None => a[(su, slot[v])] -= g,
                }
            }
        }

        let x = if free == 0 {
            DVector::zeros(0)
        } else {
            let chol = a.cholesky().ok_or_else(|| {
                Error::Numerical("conductance matrix is not positive definite".into())
            })?;
            chol.solve(&b)
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite node voltage".into()));
        }

        let voltage = |v: usize| match fixed[v] {
            Some(volt) => volt,
            None if slot[v] != usize::MAX => x[slot[v]],
            None => 0.0,
        };
        let col_voltages: Vec<f64> = (0..n).map(voltage).collect();
        let row_voltages: Vec<f64> = (0..m).map(|i| voltage(row_node(i))).collect();
        let currents = DMatrix::from_fn(m, n, |i, j| {
            if open[i * n + j] {
                0.0
            } else {
                (row_voltages[i] - col_voltages[j]) / self.memristance(i, j)
            }
        });
        Ok(NetworkSolution {
            col_voltages,
            row_voltages,
            currents,
        })
    }

    /// Writes dimensions, device constants, coupling, quantizers and the
    /// row-major `w` values, all little-endian.
    pub fn write_snapshot<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_u32::<LittleEndian>(self.rows as u32)?;
        out.write_u32::<LittleEndian>(self.cols as u32)?;
        for v in [
            self.params.r_on,
            self.params.r_off,
            self.params.d,
            self.params.mu_v,
            self.r_couple,
        ] {
            out.write_f64::<LittleEndian>(v)?;
        }
        out.write_u8(self.rectified as u8)?;
        for q in [&self.x_quant, &self.y_quant] {
            out.write_f64::<LittleEndian>(q.lo)?;
            out.write_f64::<LittleEndian>(q.hi)?;
            out.write_u32::<LittleEndian>(q.bins as u32)?;
        }
        for s in &self.states {
            out.write_f64::<LittleEndian>(s.w())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(input: &mut R) -> Result<Self> {
        let corrupt = |e: std::io::Error| Error::CorruptState(format!("plane block: {e}"));
        let rows = input.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
        let cols = input.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
        let mut f = [0.0; 5];
        for v in f.iter_mut() {
            *v = input.read_f64::<LittleEndian>().map_err(corrupt)?;
        }
        let rectified = match input.read_u8().map_err(corrupt)? {
            0 => false,
            1 => true,
            other => return Err(Error::CorruptState(format!("bad rectify flag {other}"))),
        };
        let mut quant = |axis: &str| -> Result<Quantizer> {
            let lo = input.read_f64::<LittleEndian>().map_err(corrupt)?;
            let hi = input.read_f64::<LittleEndian>().map_err(corrupt)?;
            let bins = input.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
            Quantizer::new(lo, hi, bins)
                .map_err(|e| Error::CorruptState(format!("{axis} quantizer: {e}")))
        };
        let x_quant = quant("x")?;
        let y_quant = quant("y")?;
        if x_quant.bins != cols || y_quant.bins != rows {
            return Err(Error::CorruptState(format!(
                "grid {rows}x{cols} disagrees with quantizer bins {}x{}",
                y_quant.bins, x_quant.bins
            )));
        }
        let params = DeviceParams::new(f[0], f[1], f[2], f[3])
            .map_err(|e| Error::CorruptState(e.to_string()))?;
        let mut plane = Plane::new(params, f[4], x_quant, y_quant)
            .map_err(|e| Error::CorruptState(e.to_string()))?
            .with_rectification(rectified);
        for s in plane.states.iter_mut() {
            let w = input.read_f64::<LittleEndian>().map_err(corrupt)?;
            *s = DeviceState::new(&params, w).map_err(|e| Error::CorruptState(e.to_string()))?;
        }
        Ok(plane)
    }
}

fn reachable_from_fixed(
    nodes: usize,
    edges: &[(usize, usize, f64)],
    fixed: &[Option<f64>],
) -> Vec<bool> {
    let mut adj = vec![Vec::new(); nodes];
    for &(p, q, _) in edges {
        adj[p].push(q);
        adj[q].push(p);
    }
    let mut seen = vec![false; nodes];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| fixed[v].is_some()).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}
