//! Desk-scale group, omega-space and cocycle instances, plus the versioned
//! `natmap-cocycle/1` fixture file format.
//!
//! Shipped groups: the genus-2 surface group realized by regular-octagon
//! side pairings in H^2 (opposite sides identified by translations through
//! the center), free Schottky groups in H^2 and H^3 (non-closed smoke
//! fixtures), and the genus-3 group as the index-2 subgroup of the genus-2
//! group, with the covering homomorphism.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycles::{twist, Cocycle, GroupPresentation, Homomorphism, OmegaMap, OmegaSpace, Word};
use crate::error::{Error, Result};
use crate::geometry::{Isometry, ModelSpace};

/// A realized group acting on a model space.
#[derive(Debug, Clone)]
pub struct GroupFixture {
    pub id: String,
    pub space: ModelSpace,
    pub presentation: GroupPresentation,
    /// Whether the quotient is a closed manifold (volume acceptance only uses
    /// closed fixtures).
    pub closed: bool,
}

/// A finite cover: source group, target fixture, the injection on fundamental
/// groups, coset transversal and covering degree.
#[derive(Debug, Clone)]
pub struct CoverFixture {
    pub id: String,
    pub source: GroupPresentation,
    pub target: GroupFixture,
    pub homomorphism: Homomorphism,
    pub transversal: Vec<Word>,
    pub degree: i64,
}

/// Apothem of the regular octagon with interior angle pi/4: the side-pairing
/// translations have length twice this.
pub fn octagon_apothem() -> f64 {
    (1.0 / (std::f64::consts::PI / 8.0).tan()).acosh()
}

/// Circumradius of that octagon (distance from center to a vertex).
pub fn octagon_circumradius() -> f64 {
    let c = 1.0 / (std::f64::consts::PI / 8.0).tan();
    (c * c).acosh()
}

/// The translation pairing opposite sides of the regular octagon in the
/// direction `angle`.
fn octagon_translation(angle: f64) -> DMatrix<f64> {
    let axis = DVector::from_vec(vec![angle.cos(), angle.sin()]);
    Isometry::boost_matrix(&axis, 2.0 * octagon_apothem())
}

/// Genus-2 surface group from the regular octagon with opposite sides
/// identified. Generators are the side-pairing translations reordered so the
/// single relator reads a b c d a^-1 b^-1 c^-1 d^-1.
pub fn genus2_octagon() -> Result<GroupFixture> {
    let quarter = std::f64::consts::PI / 4.0;
    let t: Vec<DMatrix<f64>> = (0..4).map(|k| octagon_translation(k as f64 * quarter)).collect();
    // vertex-cycle order: (T1, T2^-1, T3, T0)
    let gens = vec![
        Isometry::from_single(t[1].clone())?,
        Isometry::from_single(t[2].clone())?.inverse(),
        Isometry::from_single(t[3].clone())?,
        Isometry::from_single(t[0].clone())?,
    ];
    let relator = Word(vec![1, 2, 3, 4, -1, -2, -3, -4]);
    let presentation = GroupPresentation::new(4, vec![relator], Some(gens))?;
    Ok(GroupFixture {
        id: "genus2-octagon".into(),
        space: ModelSpace::hyperbolic(2)?,
        presentation,
        closed: true,
    })
}

/// Free group F_2 realized by two long translations along orthogonal axes of
/// H^2. Discrete and free, but the quotient is not closed.
pub fn f2_schottky_h2() -> Result<GroupFixture> {
    let a = Isometry::from_single(Isometry::boost_matrix(
        &DVector::from_vec(vec![1.0, 0.0]),
        4.0,
    ))?;
    let b = Isometry::from_single(Isometry::boost_matrix(
        &DVector::from_vec(vec![0.0, 1.0]),
        4.0,
    ))?;
    let presentation = GroupPresentation::new(2, vec![], Some(vec![a, b]))?;
    Ok(GroupFixture {
        id: "f2-schottky-h2".into(),
        space: ModelSpace::hyperbolic(2)?,
        presentation,
        closed: false,
    })
}

/// Free group F_2 in H^3, translations along the first two coordinate axes.
pub fn f2_schottky_h3() -> Result<GroupFixture> {
    let a = Isometry::from_single(Isometry::boost_matrix(
        &DVector::from_vec(vec![1.0, 0.0, 0.0]),
        4.0,
    ))?;
    let b = Isometry::from_single(Isometry::boost_matrix(
        &DVector::from_vec(vec![0.0, 1.0, 0.0]),
        4.0,
    ))?;
    let presentation = GroupPresentation::new(2, vec![], Some(vec![a, b]))?;
    Ok(GroupFixture {
        id: "f2-schottky-h3".into(),
        space: ModelSpace::hyperbolic(3)?,
        presentation,
        closed: false,
    })
}

/// Genus-3 group as the kernel of genus-2 -> Z/2 (first generator to 1), by
/// Reidemeister-Schreier over the transversal {e, a}: generators
/// b, c, d, a^2, aba^-1, aca^-1, ada^-1 with the two rewritten relators
/// (stored in the cyclic rotations that keep f64 word evaluation tightest).
///
/// The realization is conjugated by the half-translation along the a-axis,
/// which re-centers the subgroup and halves the matrix magnitudes of the
/// conjugate generators; the covering lift is that same half-translation
/// rather than the identity, still an isometry of H^2. Degree 2.
pub fn genus3_double_cover() -> Result<CoverFixture> {
    let target = genus2_octagon()?;
    let (a, b, c, d) = (1i32, 2i32, 3i32, 4i32);
    let images = vec![
        Word(vec![b]),
        Word(vec![c]),
        Word(vec![d]),
        Word(vec![a, a]),
        Word(vec![a, b, -a]),
        Word(vec![a, c, -a]),
        Word(vec![a, d, -a]),
    ];
    let homomorphism = Homomorphism { images: images.clone() };
    // u5 u6 u7 u1^-1 u2^-1 u3^-1 rewrites the octagon relator; the second
    // relator is its conjugate by a
    let relators = vec![
        Word(vec![5, 6, 7, -1, -2, -3]),
        Word(vec![6, 5, 4, -3, -2, -1, -4, 7]),
    ];
    let lift = cover_lift()?;
    let lift_inv = lift.inverse();
    let realization = images
        .iter()
        .map(|w| {
            target
                .presentation
                .evaluate_word(w)
                .map(|g| lift_inv.compose(&g).compose(&lift))
        })
        .collect::<Result<Vec<_>>>()?;
    let source = GroupPresentation::new_with_tolerance(7, relators, Some(realization), 1e-7)?;
    Ok(CoverFixture {
        id: "genus3-double-cover".into(),
        source,
        target,
        homomorphism,
        transversal: vec![Word::empty(), Word(vec![1])],
        degree: 2,
    })
}

/// The covering lift of the genus-3 double cover: the half-translation along
/// the a-axis conjugating the source realization into the target group.
pub fn cover_lift() -> Result<Isometry> {
    let quarter = std::f64::consts::PI / 4.0;
    Isometry::from_single(Isometry::boost_matrix(
        &DVector::from_vec(vec![quarter.cos(), quarter.sin()]),
        octagon_apothem(),
    ))
}

/// The genus-3 group packaged as a stand-alone fixture (closed surface).
pub fn genus3_fixture() -> Result<GroupFixture> {
    let cover = genus3_double_cover()?;
    Ok(GroupFixture {
        id: "genus3".into(),
        space: ModelSpace::hyperbolic(2)?,
        presentation: cover.source,
        closed: true,
    })
}

/// Omega = Z/k with the first generator acting by +1 and the others trivially;
/// valid whenever every relator has first-generator exponent sum divisible by
/// k.
pub fn omega_mod_k(presentation: &GroupPresentation, k: usize) -> Result<OmegaSpace> {
    let mut actions = Vec::with_capacity(presentation.num_generators);
    for g in 0..presentation.num_generators {
        let shift = if g == 0 { 1 } else { 0 };
        actions.push((0..k).map(|x| (x + shift) % k).collect());
    }
    let omega = OmegaSpace::uniform(k, actions)?;
    omega.validate_relators(&presentation.relators)?;
    Ok(omega)
}

/// Omega for the genus-3 presentation inherited from the double cover: the
/// generator a^2 shifts Z/k by 2, conjugates and the base letters act
/// trivially.
pub fn omega_genus3_mod_k(k: usize) -> Result<OmegaSpace> {
    let mut actions: Vec<Vec<usize>> = Vec::with_capacity(7);
    for g in 0..7 {
        let shift = if g == 3 { 2 } else { 0 };
        actions.push((0..k).map(|x| (x + shift) % k).collect());
    }
    OmegaSpace::uniform(k, actions)
}

/// Seeded random isometry of a space with the given factor dimensions:
/// composed rotations and a boost of length at most `max_len`.
pub fn random_isometry(rng: &mut ChaCha8Rng, factor_dims: &[usize], max_len: f64) -> Isometry {
    let mats = factor_dims
        .iter()
        .map(|&n| {
            let mut m = DMatrix::identity(n + 1, n + 1);
            for i in 0..n {
                for j in (i + 1)..n {
                    m = Isometry::rotation_matrix(
                        n,
                        i,
                        j,
                        rng.random_range(0.0..std::f64::consts::TAU),
                    ) * m;
                }
            }
            let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0_f64));
            let norm = v.norm().max(1e-9);
            Isometry::boost_matrix(&(v / norm), rng.random_range(0.0..max_len)) * m
        })
        .collect();
    Isometry::from_factor_matrices(mats).expect("constructed from rotations and boosts")
}

/// Random omega map with moderate displacements, for twisting fixtures.
pub fn random_omega_map(omega_size: usize, factor_dims: &[usize], seed: u64) -> OmegaMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OmegaMap {
        table: (0..omega_size)
            .map(|_| random_isometry(&mut rng, factor_dims, 0.6))
            .collect(),
    }
}

/// The representation cocycle of the fixture's realization over Z/k.
pub fn rep_cocycle(fixture: &GroupFixture, k: usize) -> Result<Cocycle> {
    let omega = omega_mod_k(&fixture.presentation, k)?;
    Cocycle::from_representation(
        fixture.presentation.clone(),
        omega,
        fixture
            .presentation
            .realization
            .clone()
            .ok_or_else(|| Error::Config("fixture lacks a realization".into()))?,
    )
}

/// A genuinely omega-dependent cocycle: the representation cocycle twisted by
/// a seeded random omega map.
pub fn twisted_cocycle_fixture(fixture: &GroupFixture, k: usize, seed: u64) -> Result<Cocycle> {
    let sigma = rep_cocycle(fixture, k)?;
    let f = random_omega_map(k, &sigma.factor_dims(), seed);
    twist(&f, &sigma)
}

// ---------------------------------------------------------------------------
// natmap-cocycle/1 fixture files
// ---------------------------------------------------------------------------

pub const COCYCLE_SCHEMA: &str = "natmap-cocycle/1";

#[derive(Debug, Serialize, Deserialize)]
struct MatrixData {
    rows: usize,
    data: Vec<f64>,
}

impl MatrixData {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            data: m.transpose().as_slice().to_vec(), // row-major
        }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rows * self.rows != self.data.len() {
            return Err(Error::Parse(format!(
                "matrix with {} rows needs {} entries, got {}",
                self.rows,
                self.rows * self.rows,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.rows, &self.data))
    }
}

fn isometry_to_data(g: &Isometry) -> Vec<MatrixData> {
    g.factors.iter().map(MatrixData::from_matrix).collect()
}

fn isometry_from_data(data: &[MatrixData]) -> Result<Isometry> {
    Isometry::from_factor_matrices(
        data.iter().map(|d| d.to_matrix()).collect::<Result<Vec<_>>>()?,
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct SpaceData {
    factors: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PresentationData {
    generators: usize,
    relators: Vec<Vec<i32>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OmegaData {
    weights: Vec<f64>,
    actions: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CocycleFile {
    schema: String,
    id: String,
    space: SpaceData,
    presentation: PresentationData,
    omega: OmegaData,
    /// realization[g] = factor matrices of the realized generator g
    realization: Option<Vec<Vec<MatrixData>>>,
    /// table[g][x] = factor matrices of sigma(generator g, omega point x)
    table: Vec<Vec<Vec<MatrixData>>>,
}

/// Serialize a cocycle (with the space it acts on) to the fixture schema.
pub fn save_cocycle(path: &Path, id: &str, space: &ModelSpace, sigma: &Cocycle) -> Result<()> {
    let file = CocycleFile {
        schema: COCYCLE_SCHEMA.to_string(),
        id: id.to_string(),
        space: SpaceData {
            factors: space.factor_dims().to_vec(),
        },
        presentation: PresentationData {
            generators: sigma.presentation.num_generators,
            relators: sigma.presentation.relators.iter().map(|w| w.0.clone()).collect(),
        },
        omega: OmegaData {
            weights: sigma.omega.weights.clone(),
            actions: sigma.omega.actions.clone(),
        },
        realization: sigma
            .presentation
            .realization
            .as_ref()
            .map(|gens| gens.iter().map(isometry_to_data).collect()),
        table: sigma
            .table
            .iter()
            .map(|row| row.iter().map(isometry_to_data).collect())
            .collect(),
    };
    let text = toml::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Load and validate a cocycle fixture file.
pub fn load_cocycle(path: &Path) -> Result<(String, ModelSpace, Cocycle)> {
    let text = std::fs::read_to_string(path)?;
    let file: CocycleFile = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.schema != COCYCLE_SCHEMA {
        return Err(Error::Parse(format!(
            "schema {} is not {COCYCLE_SCHEMA}",
            file.schema
        )));
    }
    let space = if file.space.factors.len() == 1 {
        ModelSpace::hyperbolic(file.space.factors[0])?
    } else {
        ModelSpace::product(&file.space.factors)?
    };
    let realization = file
        .realization
        .as_ref()
        .map(|gens| gens.iter().map(|g| isometry_from_data(g)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let presentation = GroupPresentation::new(
        file.presentation.generators,
        file.presentation.relators.iter().cloned().map(Word).collect(),
        realization,
    )?;
    let omega = OmegaSpace::new(file.omega.weights.clone(), file.omega.actions.clone())?;
    let table = file
        .table
        .iter()
        .map(|row| row.iter().map(|g| isometry_from_data(g)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let sigma = Cocycle::new(presentation, omega, table)?;
    Ok((file.id, space, sigma))
}

/// Resolve a fixture id to its group fixture.
pub fn group_fixture_by_id(id: &str) -> Result<GroupFixture> {
    match id {
        "genus2-octagon" => genus2_octagon(),
        "genus3" => genus3_fixture(),
        "f2-schottky-h2" => f2_schottky_h2(),
        "f2-schottky-h3" => f2_schottky_h3(),
        other => Err(Error::Config(format!("unknown group fixture '{other}'"))),
    }
}
