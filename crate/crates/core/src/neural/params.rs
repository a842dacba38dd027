/// Read-only view of one named parameter array.
#[derive(Debug, Clone, Copy)]
pub struct ParamView<'a> {
    pub name: &'a str,
    pub rows: usize,
    pub cols: usize,
    pub values: &'a [f64],
}

/// Gradient buffers aligned with a model's parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like(views: &[ParamView<'_>]) -> Self {
        Gradients(views.iter().map(|v| vec![0.0; v.values.len()]).collect())
    }

    pub fn zero(&mut self) {
        for g in &mut self.0 {
            g.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.0 {
            for x in g.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn groups(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn groups_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.0
    }
}
