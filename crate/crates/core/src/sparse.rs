use nalgebra::DMatrix;

/// Square matrix in compressed sparse row form. Columns within a row are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Duplicate coordinates are summed; exact zeros are dropped.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Csr { n, row_ptr, cols, vals };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.vals.iter().all(|&v| v != 0.0) {
            return;
        }
        let trips: Vec<_> = self.iter().filter(|t| t.2 != 0.0).collect();
        let mut row_ptr = vec![0usize; self.n + 1];
        for &(i, _, _) in &trips {
            row_ptr[i + 1] += 1;
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        self.cols = trips.iter().map(|t| t.1).collect();
        self.vals = trips.iter().map(|t| t.2).collect();
        self.row_ptr = row_ptr;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    /// out = v M
    pub fn mul_row_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let (c, x) = self.row(i);
            for (&j, &m) in c.iter().zip(x) {
                out[j] += vi * m;
            }
        }
    }

    /// out = M u
    pub fn mul_col_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (c, x) = self.row(i);
            *o = c.iter().zip(x).map(|(&j, &m)| m * u[j]).sum();
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn map<F: Fn(usize, usize, f64) -> f64>(&self, f: F) -> Csr {
        Csr::from_triplets(self.n, self.iter().map(|(i, j, v)| (i, j, f(i, j, v))))
    }

    pub fn transpose(&self) -> Csr {
        Csr::from_triplets(self.n, self.iter().map(|(i, j, v)| (j, i, v)))
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn principal(&self, keep: &[usize]) -> Csr {
        let mut local = vec![usize::MAX; self.n];
        for (a, &s) in keep.iter().enumerate() {
            local[s] = a;
        }
        let trips = keep.iter().enumerate().flat_map(|(a, &s)| {
            let (c, v) = self.row(s);
            let local = &local;
            c.iter()
                .zip(v)
                .filter(move |(&j, _)| local[j] != usize::MAX)
                .map(move |(&j, &x)| (a, local[j], x))
        });
        Csr::from_triplets(keep.len(), trips.collect::<Vec<_>>())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    /// D M with D the dense left factor: (D M)(i, j) = sum_l D(i, l) M(l, j).
    pub fn left_mul_dense(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(d.nrows(), self.n);
        for l in 0..self.n {
            let (c, x) = self.row(l);
            for (&j, &m) in c.iter().zip(x) {
                let src = d.column(l);
                let mut dst = out.column_mut(j);
                dst.axpy(m, &src, 1.0);
            }
        }
        out
    }
}
