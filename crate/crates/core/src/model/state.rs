/// Prognostic vector `V = (h, u)` stored as `[h_1 .. h_L, u_1 .. u_L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredState {
    pub layers: usize,
    pub n_cells: usize,
    pub n_edges: usize,
    pub data: Vec<f64>,
}

impl LayeredState {
    pub fn zeros(layers: usize, n_cells: usize, n_edges: usize) -> Self {
        LayeredState {
            layers,
            n_cells,
            n_edges,
            data: vec![0.0; layers * (n_cells + n_edges)],
        }
    }

    pub fn from_vec(layers: usize, n_cells: usize, n_edges: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), layers * (n_cells + n_edges));
        LayeredState {
            layers,
            n_cells,
            n_edges,
            data,
        }
    }

    pub fn like(&self, data: Vec<f64>) -> Self {
        Self::from_vec(self.layers, self.n_cells, self.n_edges, data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn h(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_cells..(k + 1) * self.n_cells]
    }

    pub fn h_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.n_cells..(k + 1) * self.n_cells]
    }

    pub fn u(&self, k: usize) -> &[f64] {
        let o = self.layers * self.n_cells;
        &self.data[o + k * self.n_edges..o + (k + 1) * self.n_edges]
    }

    pub fn u_mut(&mut self, k: usize) -> &mut [f64] {
        let o = self.layers * self.n_cells;
        &mut self.data[o + k * self.n_edges..o + (k + 1) * self.n_edges]
    }

    pub fn h_all(&self) -> &[f64] {
        &self.data[..self.layers * self.n_cells]
    }

    pub fn u_all(&self) -> &[f64] {
        &self.data[self.layers * self.n_cells..]
    }

    /// Split into `(h, u)` mutable views.
    pub fn split_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let o = self.layers * self.n_cells;
        self.data.split_at_mut(o)
    }

    pub fn axpy(&mut self, a: f64, x: &LayeredState) {
        self.data.iter_mut().zip(&x.data).for_each(|(y, x)| *y += a * x);
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.like(self.data.iter().map(|x| a * x).collect())
    }
}
