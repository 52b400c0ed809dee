use faer::{c64, Mat};

/// `i^phase · X^x Z^z` on up to 64 qubits (bit q of the basis index = qubit q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

const I_POW: [c64; 4] =
    [c64 { re: 1.0, im: 0.0 }, c64 { re: 0.0, im: 1.0 }, c64 { re: -1.0, im: 0.0 }, c64 { re: 0.0, im: -1.0 }];

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0, phase: 0 };

    pub fn x_on(q: usize) -> Self {
        Self { x: 1 << q, z: 0, phase: 0 }
    }

    pub fn z_on(q: usize) -> Self {
        Self { x: 0, z: 1 << q, phase: 0 }
    }

    pub fn y_on(q: usize) -> Self {
        Self { x: 1 << q, z: 1 << q, phase: 1 }
    }

    pub fn compose(self, rhs: Self) -> Self {
        let sign = ((self.z & rhs.x).count_ones() & 1) as u8 * 2;
        Self { x: self.x ^ rhs.x, z: self.z ^ rhs.z, phase: (self.phase + rhs.phase + sign) % 4 }
    }

    pub fn times_i_pow(self, k: u8) -> Self {
        Self { phase: (self.phase + k) % 4, ..self }
    }

    pub fn coefficient(self) -> c64 {
        I_POW[self.phase as usize]
    }

    /// `P|b⟩ = amp · |b ⊕ x⟩`; returns `(b ⊕ x, amp)`.
    #[inline]
    pub fn apply(self, b: u64) -> (u64, c64) {
        let k = (self.phase as u32 + 2 * ((self.z & b).count_ones() & 1)) % 4;
        (b ^ self.x, I_POW[k as usize])
    }

    /// Phase of `P|b⟩` as a power of i.
    #[inline]
    pub fn apply_phase(self, b: u64) -> u8 {
        ((self.phase as u32 + 2 * ((self.z & b).count_ones() & 1)) % 4) as u8
    }

    pub fn to_matrix(self, n_qubits: usize) -> Mat<c64> {
        let dim = 1usize << n_qubits;
        let mut m = Mat::<c64>::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (out, amp) = self.apply(b);
            m[(out as usize, b as usize)] = amp;
        }
        m
    }

    /// `tr[A P]` for a dense `A` in O(dim).
    pub fn trace_with(self, a: &Mat<c64>) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        for b in 0..a.nrows() as u64 {
            let (out, amp) = self.apply(b);
            acc += a[(b as usize, out as usize)] * amp;
        }
        acc
    }
}

/// Jordan-Wigner Majorana `γ_m` (normalized `γ² = 1`), `m < 2·n_qubits`.
pub fn jw_gamma(m: usize) -> PauliString {
    let q = m / 2;
    let string = (1u64 << q) - 1;
    let base = if m.is_multiple_of(2) { PauliString::x_on(q) } else { PauliString::y_on(q) };
    PauliString { x: 0, z: string, phase: 0 }.compose(base)
}
