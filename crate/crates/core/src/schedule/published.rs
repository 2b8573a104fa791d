//! Known coefficient lists for Newton-Schulz-type compositions, innermost
//! polynomial first.

use crate::poly::Composition;

/// The quintic used by the Muon optimizer, applied the same way every step.
pub const MUON_QUINTIC: [f64; 3] = [3.4445, -4.7750, 2.0315];

/// δ = 0.3, 7 cubics, 14 matmuls. Built for singular values in `(0, 1]`.
pub const CANS_D030_CUBIC_X7: [[f64; 2]; 7] = [
    [5.181702879894027, -5.177039351076183],
    [2.5854225645668487, -0.6478627820075661],
    [2.565592012027513, -0.6452645701961278],
    [2.5162233474315263, -0.6387826202434335],
    [2.401068707564606, -0.6235851252726741],
    [2.1708447617901196, -0.5928497805346629],
    [1.8394377168195162, -0.5476683622291173],
];

/// δ = 0.3, 5 quintics, 15 matmuls.
pub const CANS_D030_QUINTIC_X5: [[f64; 3]; 5] = [
    [8.492217149995927, -25.194520609944842, 18.698048862325017],
    [4.219515965675824, -3.1341586924049167, 0.5835102469062495],
    [4.102486923388631, -3.0527342942729288, 0.5742243021935801],
    [3.6850049522776493, -2.756862315006488, 0.5405198817097779],
    [2.734387280007103, -2.036641382834855, 0.4592314693659632],
];

/// δ = 0.3, 4 quintics, 12 matmuls.
pub const CANS_D030_QUINTIC_X4: [[f64; 3]; 4] = [
    [8.420293602126344, -24.910491192120688, 18.472094206318726],
    [4.101228661246281, -3.0518555467946813, 0.5741241025302702],
    [3.6809819251109155, -2.75396502307162, 0.5401902781108926],
    [2.7280916801566666, -2.0315492757300913, 0.45866431681858805],
];

/// δ = 0.00188, 9 cubics, 18 matmuls.
pub const CANS_D00188_CUBIC_X9: [[f64; 2]; 9] = [
    [5.179622107852338, -5.174287102735334],
    [2.5836099434139492, -0.6476254200945953],
    [2.5610021062961206, -0.6446627537769272],
    [2.505058237036672, -0.6373139418181356],
    [2.3764825571306125, -0.6203257475007262],
    [2.1279007426858794, -0.5870609391939776],
    [1.7930526112541054, -0.5412446350453286],
    [1.5582262242936464, -0.5082920767544266],
    [1.5021988305175455, -0.5003140810786916],
];

/// δ = 0.00443, 9 cubics, 18 matmuls.
pub const CANS_D00443_CUBIC_X9: [[f64; 2]; 9] = [
    [5.182503604966906, -5.178098480082684],
    [2.586120737395915, -0.6479542005271643],
    [2.567364126726186, -0.6454968804392178],
    [2.520560084348265, -0.6393528082067044],
    [2.410759275435182, -0.6248683598710716],
    [2.1883348130094173, -0.5952022073798908],
    [1.8595760874873613, -0.5504490972723968],
    [1.589020160467417, -0.5126569802066718],
    [1.5051653981684994, -0.5007377068751799],
];

/// δ = 0.0035, 9 cubics, 18 matmuls.
pub const CANS_D0035_CUBIC_X9: [[f64; 2]; 9] = [
    [5.181724335835382, -5.177067731075524],
    [2.585441267930541, -0.6478652310697918],
    [2.5656394547047783, -0.6452707898813249],
    [2.5163392603382473, -0.6387978622974516],
    [2.401326686185833, -0.6236192975654269],
    [2.17130618635129, -0.5929118810597139],
    [1.8399595521688579, -0.5477404797274893],
    [1.5792011481985957, -0.5112666878668612],
    [1.5040821254913361, -0.500583031372834],
];

/// Six quintics found by computational search (coefficients in 1/1024 units).
pub const JIACHENG_QUINTIC_X6: [[f64; 3]; 6] = [
    [3955.0 / 1024.0, -8306.0 / 1024.0, 5008.0 / 1024.0],
    [3735.0 / 1024.0, -6681.0 / 1024.0, 3463.0 / 1024.0],
    [3799.0 / 1024.0, -6499.0 / 1024.0, 3211.0 / 1024.0],
    [4019.0 / 1024.0, -6385.0 / 1024.0, 2906.0 / 1024.0],
    [2677.0 / 1024.0, -3029.0 / 1024.0, 1162.0 / 1024.0],
    [2172.0 / 1024.0, -1833.0 / 1024.0, 682.0 / 1024.0],
];

fn from_rows<const N: usize>(rows: &[[f64; N]]) -> Composition {
    let lists: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    Composition::from_coefficients(&lists).expect("constant coefficient lists are valid")
}

pub fn muon(iterations: usize) -> Composition {
    from_rows(&vec![MUON_QUINTIC; iterations.max(1)])
}

/// A published list together with the half-width it was designed for.
pub struct NamedComposition {
    pub name: &'static str,
    pub delta: Option<f64>,
    pub composition: Composition,
}

/// Every list in this module. The Muon entry uses five iterations.
pub fn all() -> Vec<NamedComposition> {
    vec![
        NamedComposition { name: "muon-x5", delta: None, composition: muon(5) },
        NamedComposition { name: "cans-d0.3-cubic-x7", delta: Some(0.3), composition: from_rows(&CANS_D030_CUBIC_X7) },
        NamedComposition {
            name: "cans-d0.3-quintic-x5",
            delta: Some(0.3),
            composition: from_rows(&CANS_D030_QUINTIC_X5),
        },
        NamedComposition {
            name: "cans-d0.3-quintic-x4",
            delta: Some(0.3),
            composition: from_rows(&CANS_D030_QUINTIC_X4),
        },
        NamedComposition {
            name: "cans-d0.00188-cubic-x9",
            delta: Some(0.00188),
            composition: from_rows(&CANS_D00188_CUBIC_X9),
        },
        NamedComposition {
            name: "cans-d0.00443-cubic-x9",
            delta: Some(0.00443),
            composition: from_rows(&CANS_D00443_CUBIC_X9),
        },
        NamedComposition {
            name: "cans-d0.0035-cubic-x9",
            delta: Some(0.0035),
            composition: from_rows(&CANS_D0035_CUBIC_X9),
        },
        NamedComposition { name: "jiacheng-x6", delta: None, composition: from_rows(&JIACHENG_QUINTIC_X6) },
    ]
}
