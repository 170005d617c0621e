/// Reads little-endian `f64`s, including NaN and infinities, padding with zeros.
pub fn design_vector(data: &[u8], len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    v.resize(len, 0.0);
    v
}
