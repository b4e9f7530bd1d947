//! Shared test support: an independent dense-grid reference evolution,
//! seeded random generators for spinors and density matrices, a Taylor
//! matrix exponential, an autocorrelation estimate, and a small JSON-schema
//! checker for the run summary.

#![allow(dead_code)]

use qwalk2d::coin::{coin_matrix, CoinParams};
use qwalk2d::mat4::{vnorm_sqr, C64, Mat4, Vec4, VEC4_ZERO};
use qwalk2d::spectral::HermitianMatrix4;
use qwalk2d::walk::SHIFT_DISPLACEMENTS;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Deterministic RNG for reproducible draws.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_unit_spinor(rng: &mut ChaCha8Rng) -> Vec4 {
    loop {
        let v = [
            random_complex(rng),
            random_complex(rng),
            random_complex(rng),
            random_complex(rng),
        ];
        let norm = vnorm_sqr(&v).sqrt();
        if norm > 1e-3 {
            return [v[0] / norm, v[1] / norm, v[2] / norm, v[3] / norm];
        }
    }
}

/// A random Hermitian matrix H = (A + A†)/2 with entries uniform in the
/// complex unit square.
pub fn random_hermitian(rng: &mut ChaCha8Rng) -> Mat4 {
    let mut a = Mat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            a.0[r][c] = random_complex(rng);
        }
    }
    a.add(&a.adjoint()).scale(C64::new(0.5, 0.0))
}

/// A random full-rank-ish density matrix: a trace-normalized Gram matrix of
/// four random vectors.
pub fn random_density(rng: &mut ChaCha8Rng) -> HermitianMatrix4 {
    loop {
        let mut g = Mat4::zeros();
        for _ in 0..4 {
            let v = random_unit_spinor(rng);
            let w = rng.gen_range(0.05..1.0);
            let mut outer = Mat4::zeros();
            outer.add_outer(&v, &v);
            g = g.add(&outer.scale(C64::new(w, 0.0)));
        }
        let trace = g.trace().re;
        if trace > 1e-6 {
            let rho = g.scale(C64::new(1.0 / trace, 0.0));
            return HermitianMatrix4::new(rho).expect("Gram matrices are Hermitian");
        }
    }
}

/// Independent reference evolution on a dense square grid covering the light
/// cone. Shares only the coin-matrix values with the library; storage,
/// shifting, and bookkeeping are separate code.
pub struct DenseWalk {
    half: i64,
    side: usize,
    data: Vec<Vec4>,
}

impl DenseWalk {
    /// Evolve `steps` steps from `spinor` at the origin.
    pub fn evolve(params: &CoinParams, spinor: Vec4, steps: u64) -> Self {
        let half = steps as i64 + 1;
        let side = (2 * half + 1) as usize;
        let mut data = vec![VEC4_ZERO; side * side];
        let index = |m: i64, n: i64| ((m + half) as usize) * side + ((n + half) as usize);
        data[index(0, 0)] = spinor;

        for t in 1..=steps {
            let coin = coin_matrix(params, t);
            let mut next = vec![VEC4_ZERO; side * side];
            for m in -half..=half {
                for n in -half..=half {
                    let v = data[index(m, n)];
                    if vnorm_sqr(&v) == 0.0 {
                        continue;
                    }
                    let rotated = coin.entries.mul_vec(&v);
                    for (i, &(dm, dn)) in SHIFT_DISPLACEMENTS.iter().enumerate() {
                        let (pm, pn) = (m + dm, n + dn);
                        if pm.abs() <= half && pn.abs() <= half {
                            next[index(pm, pn)][i] = rotated[i];
                        } else {
                            assert!(
                                rotated[i].norm() == 0.0,
                                "amplitude escaped the light cone at t={t}"
                            );
                        }
                    }
                }
            }
            data = next;
        }
        DenseWalk { half, side, data }
    }

    pub fn amplitude(&self, m: i64, n: i64) -> Vec4 {
        if m.abs() > self.half || n.abs() > self.half {
            return VEC4_ZERO;
        }
        self.data[((m + self.half) as usize) * self.side + ((n + self.half) as usize)]
    }

    pub fn half(&self) -> i64 {
        self.half
    }
}

/// exp(H) by scaling and squaring with a Taylor series; accurate enough for
/// well-conditioned test matrices (norm up to a few units).
pub fn mat_exp(h: &Mat4) -> Mat4 {
    let norm = h.max_abs();
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = h.scale(C64::new(scale, 0.0));

    let mut result = Mat4::identity();
    let mut term = Mat4::identity();
    for k in 1..=20 {
        term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        result = result.add(&term);
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// Pearson correlation between the series and itself shifted by `lag`.
pub fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    assert!(lag < series.len(), "lag must leave an overlap");
    let a = &series[..series.len() - lag];
    let b = &series[lag..];
    let n = a.len() as f64;
    let mean_a: f64 = a.iter().sum::<f64>() / n;
    let mean_b: f64 = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a).powi(2);
        var_b += (y - mean_b).powi(2);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return if var_a == var_b { 1.0 } else { 0.0 };
    }
    cov / (var_a * var_b).sqrt()
}

/// Validate `value` against a draft-07 subset: $ref into #/definitions,
/// type (single or list), enum, required, properties, items, minItems,
/// maxItems, minimum. Returns the first violation found.
pub fn validate_json(schema: &Value, value: &Value) -> Result<(), String> {
    check(schema, schema, value, "$")
}

fn type_matches(name: &str, value: &Value) -> bool {
    match name {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        other => panic!("unsupported type name {other:?} in schema"),
    }
}

fn check(root: &Value, schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        let target = reference
            .strip_prefix("#/")
            .ok_or_else(|| format!("{path}: unsupported $ref {reference}"))?
            .split('/')
            .try_fold(root, |node, key| node.get(key))
            .ok_or_else(|| format!("{path}: dangling $ref {reference}"))?;
        return check(root, target, value, path);
    }

    if let Some(ty) = schema.get("type") {
        let names: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(list) => list.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: malformed type keyword")),
        };
        if !names.iter().any(|n| type_matches(n, value)) {
            return Err(format!("{path}: expected type {names:?}, got {value}"));
        }
    }

    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{path}: {value} not in enum {options:?}"));
        }
    }

    if let Some(object) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !object.contains_key(key) {
                    return Err(format!("{path}: missing required key {key:?}"));
                }
            }
        }
        if let Some(props) = schema.get("properties").and_then(Value::as_object) {
            for (key, sub) in props {
                if let Some(v) = object.get(key) {
                    check(root, sub, v, &format!("{path}.{key}"))?;
                }
            }
        }
    }

    if let Some(array) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (array.len() as u64) < min {
                return Err(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (array.len() as u64) > max {
                return Err(format!("{path}: more than {max} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, v) in array.iter().enumerate() {
                check(root, items, v, &format!("{path}[{i}]"))?;
            }
        }
    }

    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if let Some(v) = value.as_f64() {
            if v < min {
                return Err(format!("{path}: {v} below minimum {min}"));
            }
        }
    }

    Ok(())
}
