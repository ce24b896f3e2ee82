//! Necklaces: lexicographically minimal representatives of words up to
//! cyclic rotation.

/// Yields every necklace of length `n` over `0..d` in lexicographic order
/// (Fredricksen-Kessler-Maiorana).
#[derive(Debug, Clone)]
pub struct Necklaces {
    d: usize,
    n: usize,
    a: Vec<usize>,
    started: bool,
    done: bool,
}

impl Necklaces {
    pub fn new(d: usize, n: usize) -> Self {
        Necklaces {
            d,
            n,
            a: vec![0; n + 1],
            started: false,
            done: d == 0 || n == 0,
        }
    }

    // Advances to the next prenecklace; returns its period, or None at the end.
    fn step(&mut self) -> Option<usize> {
        let mut i = self.n;
        while i > 0 && self.a[i] == self.d - 1 {
            i -= 1;
        }
        if i == 0 {
            return None;
        }
        self.a[i] += 1;
        for j in i + 1..=self.n {
            self.a[j] = self.a[j - i];
        }
        Some(i)
    }
}

impl Iterator for Necklaces {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.a[1..].to_vec());
        }
        loop {
            match self.step() {
                None => {
                    self.done = true;
                    return None;
                }
                Some(p) if self.n.is_multiple_of(p) => return Some(self.a[1..].to_vec()),
                Some(_) => {}
            }
        }
    }
}

pub fn necklace_words(d: usize, n: usize) -> Necklaces {
    Necklaces::new(d, n)
}

fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// `(1/n) Σ_{k|n} φ(k) d^{n/k}`; `None` on overflow.
pub fn necklace_count(d: usize, n: usize) -> Option<u128> {
    if n == 0 {
        return Some(1);
    }
    let mut total: u128 = 0;
    for k in 1..=n {
        if n.is_multiple_of(k) {
            let term = (d as u128).checked_pow((n / k) as u32)?;
            total = total.checked_add(term.checked_mul(euler_phi(k as u64) as u128)?)?;
        }
    }
    Some(total / n as u128)
}

/// Lexicographically smallest rotation.
pub fn canonical_rotation(w: &[usize]) -> Vec<usize> {
    (0..w.len().max(1))
        .map(|r| w[r..].iter().chain(&w[..r]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_length_three() {
        let all: Vec<_> = necklace_words(2, 3).collect();
        assert_eq!(all, vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 1], vec![1, 1, 1]]);
        assert_eq!(necklace_count(2, 3), Some(4));
    }

    #[test]
    fn length_one() {
        assert_eq!(necklace_words(2, 1).collect::<Vec<_>>(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn seven_letters_length_four() {
        assert_eq!(necklace_words(7, 4).count(), 616);
        assert_eq!(necklace_count(7, 4), Some(616));
    }

    #[test]
    fn unary_alphabet() {
        assert_eq!(necklace_words(1, 5).collect::<Vec<_>>(), vec![vec![0; 5]]);
    }

    #[test]
    fn representatives_are_minimal() {
        for w in necklace_words(3, 6) {
            assert_eq!(canonical_rotation(&w), w);
        }
    }
}
