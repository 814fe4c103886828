//! Elementary number theory on machine integers.

use alloc::vec::Vec;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_i64(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

/// Exact floor of the square root.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let n = n as u128;
    let mut x = libm::sqrt(n as f64) as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x as u64
}

pub fn is_square(n: u64) -> Option<u64> {
    let s = isqrt(n);
    (s * s == n).then_some(s)
}

/// Returns (g, x, y) with a·x + b·y = g = gcd(a, b).
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

pub fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: i64, n: u64) -> i32 {
    assert!(n % 2 == 1, "jacobi symbol needs an odd modulus");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut result = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                result = -result;
            }
        }
        core::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Prime factorisation by trial division as (prime, exponent) pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && matches!(factorize(n).as_slice(), [(_, 1)])
}

/// Euler's totient.
pub fn totient(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    factorize(n).iter().fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Number of divisors.
pub fn divisor_count(n: u64) -> u64 {
    factorize(n).iter().map(|(_, e)| *e as u64 + 1).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_values() {
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(isqrt(24), 4);
        assert_eq!(isqrt(25), 5);
        assert_eq!(isqrt(u64::MAX), 4_294_967_295);
        assert_eq!(mod_inv(3, 7), Some(5));
        assert_eq!(mod_inv(2, 4), None);
        assert_eq!(totient(1), 1);
        assert_eq!(totient(36), 12);
        assert_eq!(divisor_count(36), 9);
        assert_eq!(jacobi(2, 7), 1);
        assert_eq!(jacobi(3, 7), -1);
        assert_eq!(jacobi(6, 9), 0);
        assert!(is_prime(499) && !is_prime(1) && !is_prime(91));
    }

    fn legendre_by_euler(a: i64, p: u64) -> i32 {
        let a = a.rem_euclid(p as i64) as u64;
        if a == 0 {
            return 0;
        }
        let mut acc = 1u64;
        let mut base = a;
        let mut e = (p - 1) / 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = mod_mul(acc, base, p);
            }
            base = mod_mul(base, base, p);
            e >>= 1;
        }
        if acc == 1 {
            1
        } else {
            -1
        }
    }

    proptest! {
        #[test]
        fn jacobi_is_multiplicative_in_modulus(a in -500i64..500, i in 0usize..20, j in 0usize..20) {
            const ODD_PRIMES: [u64; 20] = [3,5,7,11,13,17,19,23,29,31,37,41,43,47,53,59,61,67,71,73];
            let (p, q) = (ODD_PRIMES[i], ODD_PRIMES[j]);
            prop_assert_eq!(jacobi(a, p), legendre_by_euler(a, p));
            prop_assert_eq!(jacobi(a, p * q), legendre_by_euler(a, p) * legendre_by_euler(a, q));
        }

        #[test]
        fn inverse_really_inverts(a in 1i64..10_000, m in 2i64..10_000) {
            match mod_inv(a, m) {
                Some(x) => prop_assert_eq!((a * x).rem_euclid(m), 1),
                None => prop_assert!(gcd_i64(a, m) > 1),
            }
        }

        #[test]
        fn factorisation_multiplies_back(n in 1u64..1_000_000) {
            let f = factorize(n);
            prop_assert_eq!(f.iter().map(|(p, e)| p.pow(*e)).product::<u64>(), n);
            prop_assert!(f.iter().all(|(p, _)| is_prime(*p)));
        }
    }
}
