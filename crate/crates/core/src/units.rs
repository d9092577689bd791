//! Decibel helpers. Everything inside the library is linear scale.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_db() {
        assert!((db_to_linear(5.0) - 3.1622776601683795).abs() < 1e-14);
        assert_eq!(db_to_linear(0.0), 1.0);
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -100.0f64..100.0) {
            let back = linear_to_db(db_to_linear(db));
            prop_assert!((back - db).abs() <= 1e-12);
        }
    }
}
