//! Sequential or rayon-backed execution with deterministic output order.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        self == Exec::Parallel && cfg!(feature = "parallel")
    }

    /// `f` applied to every index in `0..n`, results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fills `out` chunk by chunk; `f(start, chunk)` writes `out[start..start + chunk.len()]`.
    pub fn fill_chunks<T, F>(self, out: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(k, c)| f(k * chunk, c));
            return;
        }
        for (k, c) in out.chunks_mut(chunk).enumerate() {
            f(k * chunk, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let a = Exec::Sequential.map_range(100, |i| i * i);
        let b = Exec::Parallel.map_range(100, |i| i * i);
        assert_eq!(a, b);
        let mut x = vec![0usize; 37];
        let mut y = vec![0usize; 37];
        Exec::Sequential.fill_chunks(&mut x, 5, |s, c| {
            c.iter_mut().enumerate().for_each(|(k, v)| *v = s + k)
        });
        Exec::Parallel.fill_chunks(&mut y, 5, |s, c| {
            c.iter_mut().enumerate().for_each(|(k, v)| *v = s + k)
        });
        assert_eq!(x, y);
        assert_eq!(x[36], 36);
    }
}
