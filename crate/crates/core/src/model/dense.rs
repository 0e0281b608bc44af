/// Fully connected layer whose weights live at fixed offsets of a flat
/// parameter vector. Weights are row-major `[output][input]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Dense {
    pub input: usize,
    pub output: usize,
    pub weight: usize,
    pub bias: Option<usize>,
}

impl Dense {
    /// Allocates a layer at `*cursor` and advances it.
    pub fn alloc(cursor: &mut usize, input: usize, output: usize, bias: bool) -> Self {
        let weight = *cursor;
        *cursor += input * output;
        let bias = bias.then(|| {
            let b = *cursor;
            *cursor += output;
            b
        });
        Dense {
            input,
            output,
            weight,
            bias,
        }
    }

    pub fn param_count(&self) -> usize {
        self.input * self.output + if self.bias.is_some() { self.output } else { 0 }
    }

    pub fn fan_in(&self) -> usize {
        self.input
    }

    #[inline]
    fn row<'a>(&self, params: &'a [f64], o: usize) -> &'a [f64] {
        let start = self.weight + o * self.input;
        &params[start..start + self.input]
    }

    pub fn forward(&self, params: &[f64], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.input);
        debug_assert_eq!(y.len(), self.output);
        for (o, out) in y.iter_mut().enumerate() {
            let row = self.row(params, o);
            let mut acc = self.bias.map_or(0.0, |b| params[b + o]);
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *out = acc;
        }
    }

    /// Accumulates parameter gradients into `grad` and, if requested, the
    /// input gradient into `dx`.
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        dy: &[f64],
        grad: &mut [f64],
        mut dx: Option<&mut [f64]>,
    ) {
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let start = self.weight + o * self.input;
            for (gw, v) in grad[start..start + self.input].iter_mut().zip(x) {
                *gw += g * v;
            }
            if let Some(b) = self.bias {
                grad[b + o] += g;
            }
            if let Some(dx) = dx.as_deref_mut() {
                for (d, w) in dx.iter_mut().zip(self.row(params, o)) {
                    *d += g * w;
                }
            }
        }
    }
}

#[inline]
pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes upstream gradient where the ReLU output was not positive.
#[inline]
pub(crate) fn relu_mask(activation: &[f64], grad: &mut [f64]) {
    for (g, a) in grad.iter_mut().zip(activation) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}
