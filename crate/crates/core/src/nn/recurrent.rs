//! Recurrent cells: LSTM with optional peephole connections, GRU, and a
//! bidirectional wrapper that concatenates both directions per time step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{BlockId, Gradients, Init, ParamStore};
use crate::math::{axpy, dot, sigmoid, tanh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub peephole: bool,
}

impl LstmSpec {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            peephole: true,
        }
    }
}

/// Gate rows are stacked `[input, forget, candidate, output]` in `w`, which is
/// `4H x (I + H)` acting on `[x_t; h_{t-1}]`. Peepholes are `[p_i, p_f, p_o]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lstm {
    pub spec: LstmSpec,
    pub w: BlockId,
    pub b: BlockId,
    pub peep: Option<BlockId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    steps: usize,
    xs: Vec<f64>,
    /// `(T + 1) x H`, row 0 is the zero initial state.
    hs: Vec<f64>,
    cs: Vec<f64>,
    /// `T x 4H` post-activation gates.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCache {
    /// `T x H` hidden states `h_1..h_T`.
    pub fn hidden(&self) -> &[f64] {
        let h = self.hs.len() / (self.steps + 1);
        &self.hs[h..]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Lstm {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, spec: LstmSpec, rng: &mut R) -> Self {
        let (i, h) = (spec.input_dim, spec.hidden_dim);
        let w = store.add(
            &format!("{name}.w"),
            4 * h,
            i + h,
            Init::Glorot {
                fan_in: i + h,
                fan_out: h,
            },
            rng,
        );
        let b = store.add(&format!("{name}.b"), 4 * h, 1, Init::Constant(0.0), rng);
        store.get_mut(b)[h..2 * h].fill(1.0);
        let peep = spec
            .peephole
            .then(|| store.add(&format!("{name}.peephole"), 3 * h, 1, Init::Constant(0.0), rng));
        Self { spec, w, b, peep }
    }

    /// Runs the cell over a `T x I` input sequence from a zero state.
    pub fn forward(&self, store: &ParamStore, xs: &[f64]) -> LstmCache {
        let (ni, nh) = (self.spec.input_dim, self.spec.hidden_dim);
        let steps = xs.len() / ni;
        debug_assert_eq!(steps * ni, xs.len());
        let w = store.get(self.w);
        let b = store.get(self.b);
        let peep = self.peep.map(|p| store.get(p));
        let cols = ni + nh;
        let mut hs = vec![0.0; (steps + 1) * nh];
        let mut cs = vec![0.0; (steps + 1) * nh];
        let mut gates = vec![0.0; steps * 4 * nh];
        let mut tanh_c = vec![0.0; steps * nh];
        let mut z = vec![0.0; 4 * nh];
        for t in 0..steps {
            let x = &xs[t * ni..(t + 1) * ni];
            let (h_prev, c_prev) = (&hs[t * nh..(t + 1) * nh], &cs[t * nh..(t + 1) * nh]);
            for r in 0..4 * nh {
                let row = &w[r * cols..(r + 1) * cols];
                z[r] = b[r] + dot(&row[..ni], x) + dot(&row[ni..], h_prev);
            }
            let c_prev = c_prev.to_vec();
            let g = &mut gates[t * 4 * nh..(t + 1) * 4 * nh];
            let mut c_new = vec![0.0; nh];
            for k in 0..nh {
                let (pi, pf) = peep.map_or((0.0, 0.0), |p| (p[k], p[nh + k]));
                let ig = sigmoid(z[k] + pi * c_prev[k]);
                let fg = sigmoid(z[nh + k] + pf * c_prev[k]);
                let cg = tanh(z[2 * nh + k]);
                c_new[k] = fg * c_prev[k] + ig * cg;
                g[k] = ig;
                g[nh + k] = fg;
                g[2 * nh + k] = cg;
            }
            for k in 0..nh {
                let po = peep.map_or(0.0, |p| p[2 * nh + k]);
                let og = sigmoid(z[3 * nh + k] + po * c_new[k]);
                g[3 * nh + k] = og;
                let tc = tanh(c_new[k]);
                tanh_c[t * nh + k] = tc;
                hs[(t + 1) * nh + k] = og * tc;
                cs[(t + 1) * nh + k] = c_new[k];
            }
        }
        LstmCache {
            steps,
            xs: xs.to_vec(),
            hs,
            cs,
            gates,
            tanh_c,
        }
    }

    /// Backpropagates `dL/dh_t` (`T x H`) through time; returns `dL/dx` (`T x I`).
    pub fn backward(&self, store: &ParamStore, grads: &mut Gradients, cache: &LstmCache, dhidden: &[f64]) -> Vec<f64> {
        let (ni, nh) = (self.spec.input_dim, self.spec.hidden_dim);
        let cols = ni + nh;
        let steps = cache.steps;
        let w = store.get(self.w);
        let peep = self.peep.map(|p| store.get(p));
        let mut dxs = vec![0.0; steps * ni];
        let mut dh_next = vec![0.0; nh];
        let mut dc_next = vec![0.0; nh];
        let mut dz = vec![0.0; 4 * nh];
        let mut dpeep = vec![0.0; 3 * nh];
        let mut dw = vec![0.0; 4 * nh * cols];
        let mut db = vec![0.0; 4 * nh];
        for t in (0..steps).rev() {
            let g = &cache.gates[t * 4 * nh..(t + 1) * 4 * nh];
            let c_prev = &cache.cs[t * nh..(t + 1) * nh];
            let c_cur = &cache.cs[(t + 1) * nh..(t + 2) * nh];
            let tc = &cache.tanh_c[t * nh..(t + 1) * nh];
            for k in 0..nh {
                let (ig, fg, cg, og) = (g[k], g[nh + k], g[2 * nh + k], g[3 * nh + k]);
                let dh = dhidden[t * nh + k] + dh_next[k];
                let dzo = dh * tc[k] * og * (1.0 - og);
                let po = peep.map_or(0.0, |p| p[2 * nh + k]);
                let dc = dc_next[k] + dh * og * (1.0 - tc[k] * tc[k]) + dzo * po;
                let dzi = dc * cg * ig * (1.0 - ig);
                let dzf = dc * c_prev[k] * fg * (1.0 - fg);
                let dzg = dc * ig * (1.0 - cg * cg);
                dz[k] = dzi;
                dz[nh + k] = dzf;
                dz[2 * nh + k] = dzg;
                dz[3 * nh + k] = dzo;
                let (pi, pf) = peep.map_or((0.0, 0.0), |p| (p[k], p[nh + k]));
                dpeep[k] += dzi * c_prev[k];
                dpeep[nh + k] += dzf * c_prev[k];
                dpeep[2 * nh + k] += dzo * c_cur[k];
                dc_next[k] = dc * fg + dzi * pi + dzf * pf;
            }
            let x = &cache.xs[t * ni..(t + 1) * ni];
            let h_prev = &cache.hs[t * nh..(t + 1) * nh];
            dh_next.fill(0.0);
            let dx = &mut dxs[t * ni..(t + 1) * ni];
            for r in 0..4 * nh {
                let d = dz[r];
                db[r] += d;
                let row = &w[r * cols..(r + 1) * cols];
                let grow = &mut dw[r * cols..(r + 1) * cols];
                axpy(d, x, &mut grow[..ni]);
                axpy(d, h_prev, &mut grow[ni..]);
                axpy(d, &row[..ni], dx);
                axpy(d, &row[ni..], &mut dh_next);
            }
        }
        add_into(grads.get_mut(self.w), &dw);
        add_into(grads.get_mut(self.b), &db);
        if let Some(p) = self.peep {
            add_into(grads.get_mut(p), &dpeep);
        }
        dxs
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

/// Gated recurrent unit with gates `[reset, update, candidate]`:
/// `h' = (1 - z) n + z h` with `n = tanh(Wx_n x + b_n + r * (Wh_n h + bh_n))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gru {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub wx: BlockId,
    pub wh: BlockId,
    pub bx: BlockId,
    pub bh: BlockId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruCache {
    steps: usize,
    xs: Vec<f64>,
    hs: Vec<f64>,
    /// `T x 3H`: r, z, n.
    gates: Vec<f64>,
    /// `T x H`: `Wh_n h + bh_n`.
    ah_n: Vec<f64>,
}

impl GruCache {
    pub fn hidden(&self) -> &[f64] {
        let h = self.hs.len() / (self.steps + 1);
        &self.hs[h..]
    }
}

impl Gru {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let (i, h) = (input_dim, hidden_dim);
        let wx = store.add(&format!("{name}.wx"), 3 * h, i, Init::Glorot { fan_in: i, fan_out: h }, rng);
        let wh = store.add(&format!("{name}.wh"), 3 * h, h, Init::Glorot { fan_in: h, fan_out: h }, rng);
        let bx = store.add(&format!("{name}.bx"), 3 * h, 1, Init::Constant(0.0), rng);
        let bh = store.add(&format!("{name}.bh"), 3 * h, 1, Init::Constant(0.0), rng);
        Self {
            input_dim,
            hidden_dim,
            wx,
            wh,
            bx,
            bh,
        }
    }

    pub fn forward(&self, store: &ParamStore, xs: &[f64]) -> GruCache {
        let (ni, nh) = (self.input_dim, self.hidden_dim);
        let steps = xs.len() / ni;
        let (wx, wh) = (store.get(self.wx), store.get(self.wh));
        let (bx, bh) = (store.get(self.bx), store.get(self.bh));
        let mut hs = vec![0.0; (steps + 1) * nh];
        let mut gates = vec![0.0; steps * 3 * nh];
        let mut ah_n = vec![0.0; steps * nh];
        let mut ax = vec![0.0; 3 * nh];
        let mut ah = vec![0.0; 3 * nh];
        for t in 0..steps {
            let x = &xs[t * ni..(t + 1) * ni];
            for r in 0..3 * nh {
                ax[r] = bx[r] + wx[r * ni..(r + 1) * ni].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                let hp = &hs[t * nh..(t + 1) * nh];
                ah[r] = bh[r] + wh[r * nh..(r + 1) * nh].iter().zip(hp).map(|(a, b)| a * b).sum::<f64>();
            }
            for k in 0..nh {
                let r = sigmoid(ax[k] + ah[k]);
                let z = sigmoid(ax[nh + k] + ah[nh + k]);
                let n = tanh(ax[2 * nh + k] + r * ah[2 * nh + k]);
                let hp = hs[t * nh + k];
                hs[(t + 1) * nh + k] = (1.0 - z) * n + z * hp;
                gates[t * 3 * nh + k] = r;
                gates[t * 3 * nh + nh + k] = z;
                gates[t * 3 * nh + 2 * nh + k] = n;
                ah_n[t * nh + k] = ah[2 * nh + k];
            }
        }
        GruCache {
            steps,
            xs: xs.to_vec(),
            hs,
            gates,
            ah_n,
        }
    }

    pub fn backward(&self, store: &ParamStore, grads: &mut Gradients, cache: &GruCache, dhidden: &[f64]) -> Vec<f64> {
        let (ni, nh) = (self.input_dim, self.hidden_dim);
        let steps = cache.steps;
        let (wx, wh) = (store.get(self.wx), store.get(self.wh));
        let mut dxs = vec![0.0; steps * ni];
        let mut dh_next = vec![0.0; nh];
        let mut dax = vec![0.0; 3 * nh];
        let mut dah = vec![0.0; 3 * nh];
        let mut gwx = vec![0.0; 3 * nh * ni];
        let mut gwh = vec![0.0; 3 * nh * nh];
        let mut gbx = vec![0.0; 3 * nh];
        let mut gbh = vec![0.0; 3 * nh];
        for t in (0..steps).rev() {
            let g = &cache.gates[t * 3 * nh..(t + 1) * 3 * nh];
            let h_prev = &cache.hs[t * nh..(t + 1) * nh];
            let mut dh_prev = vec![0.0; nh];
            for k in 0..nh {
                let (r, z, n) = (g[k], g[nh + k], g[2 * nh + k]);
                let dh = dhidden[t * nh + k] + dh_next[k];
                let dn = dh * (1.0 - z);
                let dzg = dh * (h_prev[k] - n);
                dh_prev[k] = dh * z;
                let dpre_n = dn * (1.0 - n * n);
                let dr = dpre_n * cache.ah_n[t * nh + k];
                let dpre_r = dr * r * (1.0 - r);
                let dpre_z = dzg * z * (1.0 - z);
                dax[k] = dpre_r;
                dax[nh + k] = dpre_z;
                dax[2 * nh + k] = dpre_n;
                dah[k] = dpre_r;
                dah[nh + k] = dpre_z;
                dah[2 * nh + k] = dpre_n * r;
            }
            let x = &cache.xs[t * ni..(t + 1) * ni];
            let dx = &mut dxs[t * ni..(t + 1) * ni];
            for row in 0..3 * nh {
                gbx[row] += dax[row];
                gbh[row] += dah[row];
                for k in 0..ni {
                    gwx[row * ni + k] += dax[row] * x[k];
                    dx[k] += dax[row] * wx[row * ni + k];
                }
                for k in 0..nh {
                    gwh[row * nh + k] += dah[row] * h_prev[k];
                    dh_prev[k] += dah[row] * wh[row * nh + k];
                }
            }
            dh_next = dh_prev;
        }
        add_into(grads.get_mut(self.wx), &gwx);
        add_into(grads.get_mut(self.wh), &gwh);
        add_into(grads.get_mut(self.bx), &gbx);
        add_into(grads.get_mut(self.bh), &gbh);
        dxs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Lstm { peephole: bool },
    Gru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecurrentSpec {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Experimental: runs a second cell over the reversed sequence and
    /// concatenates `[forward, backward]` per step.
    pub bidirectional: bool,
}

impl RecurrentSpec {
    pub fn output_dim(&self) -> usize {
        self.hidden_dim * if self.bidirectional { 2 } else { 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Lstm(Lstm),
    Gru(Gru),
}

#[derive(Debug, Clone, PartialEq)]
enum CellCache {
    Lstm(LstmCache),
    Gru(GruCache),
}

impl Cell {
    fn new<R: Rng>(store: &mut ParamStore, name: &str, spec: &RecurrentSpec, rng: &mut R) -> Self {
        match spec.kind {
            CellKind::Lstm { peephole } => Cell::Lstm(Lstm::new(
                store,
                name,
                LstmSpec {
                    input_dim: spec.input_dim,
                    hidden_dim: spec.hidden_dim,
                    peephole,
                },
                rng,
            )),
            CellKind::Gru => Cell::Gru(Gru::new(store, name, spec.input_dim, spec.hidden_dim, rng)),
        }
    }

    fn forward(&self, store: &ParamStore, xs: &[f64]) -> CellCache {
        match self {
            Cell::Lstm(c) => CellCache::Lstm(c.forward(store, xs)),
            Cell::Gru(c) => CellCache::Gru(c.forward(store, xs)),
        }
    }

    fn backward(&self, store: &ParamStore, grads: &mut Gradients, cache: &CellCache, dh: &[f64]) -> Vec<f64> {
        match (self, cache) {
            (Cell::Lstm(c), CellCache::Lstm(k)) => c.backward(store, grads, k, dh),
            (Cell::Gru(c), CellCache::Gru(k)) => c.backward(store, grads, k, dh),
            _ => unreachable!("cache does not belong to this cell"),
        }
    }
}

impl CellCache {
    fn hidden(&self) -> &[f64] {
        match self {
            CellCache::Lstm(c) => c.hidden(),
            CellCache::Gru(c) => c.hidden(),
        }
    }
}

/// Uni- or bidirectional recurrent layer over any [`CellKind`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recurrent {
    pub spec: RecurrentSpec,
    fwd: Cell,
    bwd: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentCache {
    steps: usize,
    fwd: CellCache,
    bwd: Option<CellCache>,
    output: Vec<f64>,
}

impl RecurrentCache {
    /// `T x output_dim` hidden states.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

fn reverse_rows(xs: &[f64], width: usize) -> Vec<f64> {
    xs.chunks_exact(width).rev().flatten().copied().collect()
}

impl Recurrent {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, spec: RecurrentSpec, rng: &mut R) -> Self {
        let fwd = Cell::new(store, &format!("{name}.fwd"), &spec, rng);
        let bwd = spec
            .bidirectional
            .then(|| Cell::new(store, &format!("{name}.bwd"), &spec, rng));
        Self { spec, fwd, bwd }
    }

    pub fn forward(&self, store: &ParamStore, xs: &[f64]) -> RecurrentCache {
        let steps = xs.len() / self.spec.input_dim;
        let h = self.spec.hidden_dim;
        let fwd = self.fwd.forward(store, xs);
        let Some(cell) = &self.bwd else {
            let output = fwd.hidden().to_vec();
            return RecurrentCache {
                steps,
                fwd,
                bwd: None,
                output,
            };
        };
        let bwd = cell.forward(store, &reverse_rows(xs, self.spec.input_dim));
        let mut output = vec![0.0; steps * 2 * h];
        for t in 0..steps {
            output[t * 2 * h..t * 2 * h + h].copy_from_slice(&fwd.hidden()[t * h..(t + 1) * h]);
            let s = steps - 1 - t;
            output[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&bwd.hidden()[s * h..(s + 1) * h]);
        }
        RecurrentCache {
            steps,
            fwd,
            bwd: Some(bwd),
            output,
        }
    }

    pub fn backward(&self, store: &ParamStore, grads: &mut Gradients, cache: &RecurrentCache, doutput: &[f64]) -> Vec<f64> {
        let Some(cell) = &self.bwd else {
            return self.fwd.backward(store, grads, &cache.fwd, doutput);
        };
        let h = self.spec.hidden_dim;
        let steps = cache.steps;
        let mut df = vec![0.0; steps * h];
        let mut db = vec![0.0; steps * h];
        for t in 0..steps {
            df[t * h..(t + 1) * h].copy_from_slice(&doutput[t * 2 * h..t * 2 * h + h]);
            let s = steps - 1 - t;
            db[s * h..(s + 1) * h].copy_from_slice(&doutput[t * 2 * h + h..(t + 1) * 2 * h]);
        }
        let mut dx = self.fwd.backward(store, grads, &cache.fwd, &df);
        let dxb = cell.backward(store, grads, cache.bwd.as_ref().expect("bidirectional cache"), &db);
        let dxb = reverse_rows(&dxb, self.spec.input_dim);
        add_into(&mut dx, &dxb);
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::check_blocks;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_lstm_gives_zero_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = ParamStore::new();
        let l = Lstm::new(&mut s, "l", LstmSpec::new(2, 4), &mut rng);
        for b in s.blocks_mut() {
            b.values.fill(0.0);
        }
        let c = l.forward(&s, &[0.0; 10]);
        assert_eq!(c.hidden().len(), 20);
        assert!(c.hidden().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_single_step_matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut s = ParamStore::new();
        let (ni, nh) = (3, 2);
        let l = Lstm::new(&mut s, "l", LstmSpec::new(ni, nh), &mut rng);
        // Non-trivial peepholes and biases.
        for (k, v) in s.get_mut(l.peep.unwrap()).iter_mut().enumerate() {
            *v = 0.1 * (k as f64 + 1.0);
        }
        for (k, v) in s.get_mut(l.b).iter_mut().enumerate() {
            *v = 0.05 * k as f64 - 0.2;
        }
        let x = [0.3, -0.7, 1.1];
        let got = l.forward(&s, &x);

        let w = s.get(l.w);
        let b = s.get(l.b);
        let p = s.get(l.peep.unwrap());
        let pre = |gate: usize, k: usize| {
            let r = gate * nh + k;
            let mut a = b[r];
            for j in 0..ni {
                a += w[r * (ni + nh) + j] * x[j];
            }
            a
        };
        let sig = |v: f64| 1.0 / (1.0 + libm::exp(-v));
        for k in 0..nh {
            // c_0 = h_0 = 0, so peepholes on i/f see zero.
            let i = sig(pre(0, k));
            let g = libm::tanh(pre(2, k));
            let c = i * g;
            let o = sig(pre(3, k) + p[2 * nh + k] * c);
            let h = o * libm::tanh(c);
            assert!((got.hidden()[k] - h).abs() < 1e-14);
        }
    }

    #[test]
    fn sequence_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = ParamStore::new();
        let l = Lstm::new(&mut s, "l", LstmSpec::new(2, 5), &mut rng);
        let c = l.forward(&s, &[0.1; 2 * 17]);
        assert_eq!(c.steps(), 17);
        assert_eq!(c.hidden().len(), 17 * 5);
    }

    fn grad_check(kind: CellKind, bidirectional: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = ParamStore::new();
        let spec = RecurrentSpec {
            kind,
            input_dim: 3,
            hidden_dim: 4,
            bidirectional,
        };
        let rnn = Recurrent::new(&mut s, "rnn", spec, &mut rng);
        if let Some(id) = s.find("rnn.fwd.peephole") {
            for v in s.get_mut(id) {
                *v = rng.random_range(-0.5..0.5);
            }
        }
        use rand::Rng;
        let steps = 5;
        let xs: Vec<f64> = (0..steps * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let proj: Vec<f64> = (0..steps * spec.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |st: &ParamStore| -> f64 {
            let c = rnn.forward(st, &xs);
            c.output().iter().zip(&proj).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut g = Gradients::zeros_like(&s);
        let cache = rnn.forward(&s, &xs);
        let dx = rnn.backward(&s, &mut g, &cache, &proj);
        let report = check_blocks(&mut s, &g, 1e-5, loss);
        assert!(report.max_rel_error() < 1e-6, "{kind:?} bi={bidirectional}: {report:?}");

        // Input gradient too.
        for k in 0..xs.len() {
            let h = 1e-5;
            let mut xp = xs.clone();
            xp[k] += h;
            let mut xm = xs.clone();
            xm[k] -= h;
            let f = |x: &[f64]| rnn.forward(&s, x).output().iter().zip(&proj).map(|(a, b)| a * b).sum::<f64>();
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((fd - dx[k]).abs() < 1e-7, "dx[{k}] {fd} vs {}", dx[k]);
        }
    }

    #[test]
    fn lstm_peephole_gradients() {
        grad_check(CellKind::Lstm { peephole: true }, false);
    }

    #[test]
    fn lstm_plain_gradients() {
        grad_check(CellKind::Lstm { peephole: false }, false);
    }

    #[test]
    fn gru_gradients() {
        grad_check(CellKind::Gru, false);
    }

    #[test]
    fn bidirectional_gradients() {
        grad_check(CellKind::Lstm { peephole: true }, true);
        grad_check(CellKind::Gru, true);
    }
}
