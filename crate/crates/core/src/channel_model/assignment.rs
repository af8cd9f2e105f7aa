use crate::error::{Result, WsrmError};

/// Subcarrier-to-user map `k = f(m, n)` and its inverse sets `S_km`.
///
/// Indices are 0-based throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    users_per_cell: usize,
    /// `user_of[m][n]`
    user_of: Vec<Vec<usize>>,
    /// `subcarriers_of[m][k]`, ascending.
    subcarriers_of: Vec<Vec<Vec<usize>>>,
}

impl Assignment {
    /// `f(m, n) = n mod K`, identical across cells.
    pub fn round_robin(num_cells: usize, users_per_cell: usize, num_subcarriers: usize) -> Result<Self> {
        if users_per_cell == 0 || users_per_cell > num_subcarriers {
            return Err(WsrmError::Config(format!(
                "cannot assign {num_subcarriers} subcarriers to {users_per_cell} users"
            )));
        }
        let row: Vec<usize> = (0..num_subcarriers).map(|n| n % users_per_cell).collect();
        Self::from_map(users_per_cell, vec![row; num_cells])
    }

    /// Builds from an explicit `user_of[m][n]` table.
    pub fn from_map(users_per_cell: usize, user_of: Vec<Vec<usize>>) -> Result<Self> {
        let mut subcarriers_of = Vec::with_capacity(user_of.len());
        for row in &user_of {
            let mut sets = vec![Vec::new(); users_per_cell];
            for (n, &k) in row.iter().enumerate() {
                if k >= users_per_cell {
                    return Err(WsrmError::Config(format!("subcarrier {n} mapped to unknown user {k}")));
                }
                sets[k].push(n);
            }
            subcarriers_of.push(sets);
        }
        Ok(Self { users_per_cell, user_of, subcarriers_of })
    }

    pub fn user(&self, cell: usize, subcarrier: usize) -> usize {
        self.user_of[cell][subcarrier]
    }

    pub fn subcarriers(&self, cell: usize, user: usize) -> &[usize] {
        &self.subcarriers_of[cell][user]
    }

    pub fn num_cells(&self) -> usize {
        self.user_of.len()
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn num_subcarriers(&self) -> usize {
        self.user_of.first().map_or(0, Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_users_four_subcarriers() {
        let a = Assignment::round_robin(1, 2, 4).unwrap();
        assert_eq!(a.subcarriers(0, 0), &[0, 2]);
        assert_eq!(a.subcarriers(0, 1), &[1, 3]);
    }

    #[test]
    fn single_user_takes_everything() {
        let a = Assignment::round_robin(2, 1, 8).unwrap();
        assert_eq!(a.subcarriers(1, 0), &(0..8).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn partition_of_64_subcarriers() {
        let a = Assignment::round_robin(2, 2, 64).unwrap();
        for m in 0..2 {
            let (s0, s1) = (a.subcarriers(m, 0), a.subcarriers(m, 1));
            assert_eq!((s0.len(), s1.len()), (32, 32));
            let mut all: Vec<usize> = s0.iter().chain(s1).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn more_users_than_subcarriers_is_a_config_error() {
        assert!(matches!(Assignment::round_robin(1, 3, 2), Err(WsrmError::Config(_))));
    }
}
