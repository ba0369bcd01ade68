//! Data-parallel helpers. With the `parallel` feature these fan out over
//! rayon's pool; without it (or in [`ExecMode::Sequential`]) they run inline.
//! Output order always equals input order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

pub fn map<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

pub fn flat_map<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Vec<R> + Sync + Send,
{
    map(mode, items, f).into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<u32> = (0..1000).collect();
        let a = map(ExecMode::Sequential, &items, |x| x * 3);
        let b = map(ExecMode::Parallel, &items, |x| x * 3);
        assert_eq!(a, b);
        let c = flat_map(ExecMode::Parallel, &items, |x| vec![*x; (*x % 3) as usize]);
        let d = flat_map(ExecMode::Sequential, &items, |x| vec![*x; (*x % 3) as usize]);
        assert_eq!(c, d);
    }
}
