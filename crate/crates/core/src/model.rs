//! Structural model of two identical shear buildings standing side by side
//! and the viscoelastic links that can couple them.
//!
//! Degrees of freedom are numbered left building first: floor `f` of the
//! left building is DOF `f - 1`, floor `f` of the right building is DOF
//! `n_floors + f - 1`. Floors are 1-based, DOFs 0-based.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildingParams {
    pub n_floors: usize,
    /// kg per floor.
    pub storey_mass: f64,
    /// N/m per storey.
    pub storey_stiffness: f64,
    /// Modal damping ratio used to fit the Rayleigh coefficients.
    pub damping_ratio: f64,
    /// m.
    pub storey_height: f64,
    /// Horizontal clear distance between the buildings, m.
    pub building_gap: f64,
}

impl Default for BuildingParams {
    fn default() -> Self {
        Self {
            n_floors: 6,
            storey_mass: 64_719.0,
            storey_stiffness: 3.7774e8,
            damping_ratio: 0.05,
            storey_height: 3.0,
            building_gap: 1.0,
        }
    }
}

impl BuildingParams {
    pub fn with_floors(n_floors: usize) -> Self {
        Self {
            n_floors,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_floors < 2 {
            return Err(Error::invalid(format!(
                "n_floors must be at least 2, got {}",
                self.n_floors
            )));
        }
        for (name, v) in [
            ("storey_mass", self.storey_mass),
            ("storey_stiffness", self.storey_stiffness),
            ("storey_height", self.storey_height),
            ("building_gap", self.building_gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.damping_ratio) {
            return Err(Error::invalid(format!(
                "damping_ratio must lie in [0, 1), got {}",
                self.damping_ratio
            )));
        }
        Ok(())
    }

    pub fn n_dof(&self) -> usize {
        2 * self.n_floors
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DamperParams {
    /// N/m per damper.
    pub k_d: f64,
    /// N·s/m per damper.
    pub c_d: f64,
    pub dampers_per_link: u32,
}

impl Default for DamperParams {
    fn default() -> Self {
        Self {
            k_d: 1e6,
            c_d: 1e8,
            dampers_per_link: 2,
        }
    }
}

impl DamperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_d >= 0.0 && self.k_d.is_finite()) || !(self.c_d >= 0.0 && self.c_d.is_finite())
        {
            return Err(Error::invalid("damper k_d and c_d must be finite and >= 0"));
        }
        if self.dampers_per_link < 1 {
            return Err(Error::invalid("dampers_per_link must be at least 1"));
        }
        Ok(())
    }
}

/// How a diagonal link's axial force is projected onto the horizontal DOFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    /// η = cos²θ with tanθ = storey_height / building_gap.
    #[default]
    Axial,
    /// η = 1 for every link.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub projection: Projection,
    /// Assemble the damper springs into the stiffness matrix (Kelvin–Voigt).
    pub include_damper_stiffness: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            projection: Projection::Axial,
            include_damper_stiffness: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Straight,
    /// Left floor `f` to right floor `f + 1`.
    DiagLeftUp,
    /// Right floor `f` to left floor `f + 1`.
    DiagRightUp,
}

impl LinkKind {
    pub fn mirrored(self) -> Self {
        match self {
            Self::Straight => Self::Straight,
            Self::DiagLeftUp => Self::DiagRightUp,
            Self::DiagRightUp => Self::DiagLeftUp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkTopology {
    /// 1-based position index.
    pub index: usize,
    pub kind: LinkKind,
    pub left_floor: usize,
    pub right_floor: usize,
}

/// Number of candidate link positions, `3 * n_floors - 2`.
pub fn position_count(n_floors: usize) -> usize {
    3 * n_floors - 2
}

/// Lists every candidate link bottom-up: for each storey gap a straight
/// link, then the two diagonals; the top-floor straight link comes last.
pub fn enumerate_positions(n_floors: usize) -> Result<Vec<LinkTopology>> {
    if n_floors < 2 {
        return Err(Error::invalid(format!(
            "n_floors must be at least 2, got {n_floors}"
        )));
    }
    let mut links = Vec::with_capacity(position_count(n_floors));
    let mut push = |kind, left_floor, right_floor| {
        links.push(LinkTopology {
            index: links.len() + 1,
            kind,
            left_floor,
            right_floor,
        })
    };
    for f in 1..n_floors {
        push(LinkKind::Straight, f, f);
        push(LinkKind::DiagLeftUp, f, f + 1);
        push(LinkKind::DiagRightUp, f + 1, f);
    }
    push(LinkKind::Straight, n_floors, n_floors);
    Ok(links)
}

/// Index of the link obtained by swapping the left and right buildings.
pub fn mirror_index(index: usize, n_floors: usize) -> usize {
    if index == position_count(n_floors) {
        return index;
    }
    match (index - 1) % 3 {
        1 => index + 1,
        2 => index - 1,
        _ => index,
    }
}

/// A set of occupied link positions, stored strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DamperConfiguration(Vec<usize>);

impl DamperConfiguration {
    /// Builds a configuration, checking the strictly increasing order. Range
    /// against a topology is checked by [`DamperConfiguration::check_range`].
    pub fn new(positions: Vec<usize>) -> Result<Self> {
        if positions.first() == Some(&0) {
            return Err(Error::config("link positions are 1-based"));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(format!(
                "positions must be strictly increasing: {positions:?}"
            )));
        }
        Ok(Self(positions))
    }

    /// Sorts and deduplicates arbitrary positions into a configuration.
    pub fn from_unordered(mut positions: Vec<usize>) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        Self::new(positions)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_range(&self, n_positions: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last > n_positions => Err(Error::config(format!(
                "position {last} is out of range 1..={n_positions}"
            ))),
            _ => Ok(()),
        }
    }

    /// The configuration with every link swapped between the buildings.
    pub fn mirrored(&self, n_floors: usize) -> Self {
        let mut positions: Vec<usize> =
            self.0.iter().map(|&i| mirror_index(i, n_floors)).collect();
        positions.sort_unstable();
        Self(positions)
    }
}

impl From<DamperConfiguration> for Vec<usize> {
    fn from(c: DamperConfiguration) -> Self {
        c.0
    }
}

impl TryFrom<Vec<usize>> for DamperConfiguration {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl fmt::Display for DamperConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for DamperConfiguration {
    type Err = Error;

    /// Accepts `2-4-7`, `2,4,7` or `2 4 7`; an empty string is the empty set.
    fn from_str(s: &str) -> Result<Self> {
        let positions = s
            .split(|c: char| c == '-' || c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::config(format!("bad link position '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(positions)
    }
}

/// Mass, Rayleigh damping, and stiffness of one shear building.
#[derive(Debug, Clone)]
pub struct BuildingMatrices {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Undamped natural circular frequencies, ascending, rad/s.
    pub frequencies: Vec<f64>,
    /// Mass- and stiffness-proportional Rayleigh coefficients.
    pub rayleigh: (f64, f64),
}

pub fn assemble_building(params: &BuildingParams) -> Result<BuildingMatrices> {
    params.validate()?;
    let n = params.n_floors;
    let (m, k) = (params.storey_mass, params.storey_stiffness);
    let mass = DMatrix::from_diagonal_element(n, n, m);
    let mut stiffness = DMatrix::zeros(n, n);
    for i in 0..n {
        stiffness[(i, i)] = if i + 1 < n { 2.0 * k } else { k };
        if i + 1 < n {
            stiffness[(i, i + 1)] = -k;
            stiffness[(i + 1, i)] = -k;
        }
    }

    // Uniform lumped mass, so the pencil (K, M) reduces to K / m.
    let eig = SymmetricEigen::new(&stiffness / m);
    let mut frequencies: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    frequencies.sort_by(f64::total_cmp);

    let zeta = params.damping_ratio;
    let (w1, w2) = (frequencies[0], frequencies[1]);
    let a0 = 2.0 * zeta * w1 * w2 / (w1 + w2);
    let a1 = 2.0 * zeta / (w1 + w2);
    let damping = &mass * a0 + &stiffness * a1;
    Ok(BuildingMatrices {
        mass,
        damping,
        stiffness,
        frequencies,
        rayleigh: (a0, a1),
    })
}

/// Horizontal projection factor of a link.
pub fn projection_factor(kind: LinkKind, geometry: &BuildingParams, mode: Projection) -> f64 {
    match (kind, mode) {
        (LinkKind::Straight, _) | (_, Projection::Unit) => 1.0,
        _ => {
            let g2 = geometry.building_gap.powi(2);
            g2 / (g2 + geometry.storey_height.powi(2))
        }
    }
}

/// Damper damping and stiffness matrices (`C_D`, `K_D`) for a configuration.
pub fn assemble_coupling(
    config: &DamperConfiguration,
    links: &[LinkTopology],
    dp: &DamperParams,
    geometry: &BuildingParams,
    projection: Projection,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    config.check_range(links.len())?;
    let nf = geometry.n_floors;
    let n = 2 * nf;
    let mut c_d = DMatrix::zeros(n, n);
    let mut k_d = DMatrix::zeros(n, n);
    let per_link = f64::from(dp.dampers_per_link);
    let (c_eff, k_eff) = (per_link * dp.c_d, per_link * dp.k_d);
    for &pos in config.positions() {
        let link = &links[pos - 1];
        let eta = projection_factor(link.kind, geometry, projection);
        let i = link.left_floor - 1;
        let j = nf + link.right_floor - 1;
        for (mat, coef) in [(&mut c_d, eta * c_eff), (&mut k_d, eta * k_eff)] {
            mat[(i, i)] += coef;
            mat[(j, j)] += coef;
            mat[(i, j)] -= coef;
            mat[(j, i)] -= coef;
        }
    }
    Ok((c_d, k_d))
}

/// Assembled equation-of-motion matrices for both buildings and their links.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub n_floors: usize,
    pub mass: DMatrix<f64>,
    pub c_struct: DMatrix<f64>,
    pub k_struct: DMatrix<f64>,
    pub c_damper: DMatrix<f64>,
    pub k_damper: DMatrix<f64>,
    pub influence: DVector<f64>,
}

impl CoupledSystem {
    pub fn n_dof(&self) -> usize {
        2 * self.n_floors
    }

    pub fn total_damping(&self) -> DMatrix<f64> {
        &self.c_struct + &self.c_damper
    }

    pub fn total_stiffness(&self) -> DMatrix<f64> {
        &self.k_struct + &self.k_damper
    }
}

fn block_diagonal(block: &DMatrix<f64>) -> DMatrix<f64> {
    let n = block.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(block);
    out.view_mut((n, n), (n, n)).copy_from(block);
    out
}

/// Building pair with its uncoupled matrices precomputed, ready to assemble
/// a [`CoupledSystem`] for any damper configuration.
#[derive(Debug, Clone)]
pub struct StructureModel {
    building: BuildingParams,
    damper: DamperParams,
    options: ModelOptions,
    links: Vec<LinkTopology>,
    single: BuildingMatrices,
    mass: DMatrix<f64>,
    c_struct: DMatrix<f64>,
    k_struct: DMatrix<f64>,
}

impl StructureModel {
    pub fn new(building: BuildingParams, damper: DamperParams, options: ModelOptions) -> Result<Self> {
        building.validate()?;
        damper.validate()?;
        let single = assemble_building(&building)?;
        let links = enumerate_positions(building.n_floors)?;
        Ok(Self {
            mass: block_diagonal(&single.mass),
            c_struct: block_diagonal(&single.damping),
            k_struct: block_diagonal(&single.stiffness),
            building,
            damper,
            options,
            links,
            single,
        })
    }

    pub fn building(&self) -> &BuildingParams {
        &self.building
    }

    pub fn damper(&self) -> &DamperParams {
        &self.damper
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    pub fn links(&self) -> &[LinkTopology] {
        &self.links
    }

    pub fn single_building(&self) -> &BuildingMatrices {
        &self.single
    }

    pub fn n_positions(&self) -> usize {
        self.links.len()
    }

    pub fn system(&self, config: &DamperConfiguration) -> Result<CoupledSystem> {
        let (c_damper, mut k_damper) = assemble_coupling(
            config,
            &self.links,
            &self.damper,
            &self.building,
            self.options.projection,
        )?;
        if !self.options.include_damper_stiffness {
            k_damper.fill(0.0);
        }
        Ok(CoupledSystem {
            n_floors: self.building.n_floors,
            mass: self.mass.clone(),
            c_struct: self.c_struct.clone(),
            k_struct: self.k_struct.clone(),
            c_damper,
            k_damper,
            influence: DVector::from_element(self.building.n_dof(), 1.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_building(n: usize) -> BuildingParams {
        BuildingParams {
            n_floors: n,
            storey_mass: 1.0,
            storey_stiffness: 1.0,
            ..BuildingParams::default()
        }
    }

    #[test]
    fn position_counts() {
        assert_eq!(enumerate_positions(6).unwrap().len(), 16);
        assert_eq!(enumerate_positions(10).unwrap().len(), 28);
        assert!(enumerate_positions(1).is_err());
    }

    #[test]
    fn two_floor_topology() {
        let links = enumerate_positions(2).unwrap();
        let summary: Vec<_> = links
            .iter()
            .map(|l| (l.index, l.kind, l.left_floor, l.right_floor))
            .collect();
        assert_eq!(
            summary,
            vec![
                (1, LinkKind::Straight, 1, 1),
                (2, LinkKind::DiagLeftUp, 1, 2),
                (3, LinkKind::DiagRightUp, 2, 1),
                (4, LinkKind::Straight, 2, 2),
            ]
        );
    }

    #[test]
    fn topology_kind_invariants() {
        for nf in 2..12 {
            for l in enumerate_positions(nf).unwrap() {
                match l.kind {
                    LinkKind::Straight => assert_eq!(l.left_floor, l.right_floor),
                    LinkKind::DiagLeftUp => assert_eq!(l.right_floor, l.left_floor + 1),
                    LinkKind::DiagRightUp => assert_eq!(l.left_floor, l.right_floor + 1),
                }
                let m = mirror_index(l.index, nf);
                let ml = enumerate_positions(nf).unwrap()[m - 1];
                assert_eq!(ml.kind, l.kind.mirrored());
                assert_eq!((ml.left_floor, ml.right_floor), (l.right_floor, l.left_floor));
            }
        }
    }

    #[test]
    fn two_storey_stencil() {
        let b = assemble_building(&unit_building(2)).unwrap();
        assert_eq!(b.stiffness, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]));
        assert_eq!(b.mass, DMatrix::identity(2, 2));
    }

    /// Closed form for a uniform fixed-free shear building:
    /// ω_j = 2·sqrt(k/m)·sin((2j−1)π / (2(2N+1))).
    fn uniform_shear_frequency(j: usize, n: usize, k: f64, m: f64) -> f64 {
        let arg = (2 * j - 1) as f64 * std::f64::consts::PI / (2.0 * (2 * n + 1) as f64);
        2.0 * (k / m).sqrt() * arg.sin()
    }

    #[test]
    fn natural_frequencies_match_closed_form() {
        let p = BuildingParams::default();
        let b = assemble_building(&p).unwrap();
        for j in 1..=p.n_floors {
            let expect = uniform_shear_frequency(j, p.n_floors, p.storey_stiffness, p.storey_mass);
            assert!((b.frequencies[j - 1] - expect).abs() < 1e-9 * expect);
        }
        // 6 storeys: first mode about 18.4 rad/s (T1 ≈ 0.34 s).
        assert!((b.frequencies[0] - 18.42).abs() < 0.01, "{}", b.frequencies[0]);
    }

    #[test]
    fn rayleigh_hits_target_ratio_on_first_two_modes() {
        let p = BuildingParams::default();
        let b = assemble_building(&p).unwrap();
        let (a0, a1) = b.rayleigh;
        for w in &b.frequencies[..2] {
            let zeta = a0 / (2.0 * w) + a1 * w / 2.0;
            assert!((zeta - p.damping_ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_configuration_has_no_coupling() {
        let p = BuildingParams::default();
        let links = enumerate_positions(p.n_floors).unwrap();
        let (c, k) = assemble_coupling(
            &DamperConfiguration::empty(),
            &links,
            &DamperParams::default(),
            &p,
            Projection::Axial,
        )
        .unwrap();
        assert!(c.iter().all(|v| *v == 0.0) && k.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_straight_link_stencil() {
        let p = BuildingParams::default();
        let nf = p.n_floors;
        let links = enumerate_positions(nf).unwrap();
        let dp = DamperParams::default();
        let c_eff = 2.0 * dp.c_d;
        // floor 3 straight link is index 7
        let f = 3;
        let cfg = DamperConfiguration::new(vec![7]).unwrap();
        assert_eq!(links[6].kind, LinkKind::Straight);
        let (c, _) = assemble_coupling(&cfg, &links, &dp, &p, Projection::Axial).unwrap();
        assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 4);
        let (i, j) = (f - 1, nf + f - 1);
        assert_eq!(c[(i, i)], c_eff);
        assert_eq!(c[(j, j)], c_eff);
        assert_eq!(c[(i, j)], -c_eff);
        assert_eq!(c[(j, i)], -c_eff);
    }

    #[test]
    fn diagonal_projection() {
        let p = BuildingParams {
            storey_height: 3.0,
            building_gap: 4.0,
            ..BuildingParams::default()
        };
        assert!((projection_factor(LinkKind::DiagLeftUp, &p, Projection::Axial) - 0.64).abs() < 1e-15);
        assert_eq!(projection_factor(LinkKind::DiagLeftUp, &p, Projection::Unit), 1.0);
        assert_eq!(projection_factor(LinkKind::Straight, &p, Projection::Axial), 1.0);
    }

    #[test]
    fn out_of_range_configuration_rejected() {
        let p = BuildingParams::default();
        let links = enumerate_positions(p.n_floors).unwrap();
        let cfg = DamperConfiguration::new(vec![3, 17]).unwrap();
        assert!(matches!(
            assemble_coupling(&cfg, &links, &DamperParams::default(), &p, Projection::Axial),
            Err(Error::Configuration(_))
        ));
        assert!(DamperConfiguration::new(vec![3, 3]).is_err());
        assert!(DamperConfiguration::new(vec![0, 3]).is_err());
    }

    #[test]
    fn configuration_text_forms() {
        let c: DamperConfiguration = "2-4-7".parse().unwrap();
        assert_eq!(c.positions(), &[2, 4, 7]);
        assert_eq!(c.to_string(), "2-4-7");
        assert_eq!("2, 4,7".parse::<DamperConfiguration>().unwrap(), c);
        assert!("7-4".parse::<DamperConfiguration>().is_err());
    }

    #[test]
    fn mirrored_configuration() {
        // 6 floors: 2 = DiagLeftUp(1), 3 = DiagRightUp(1), 16 = top straight.
        let c = DamperConfiguration::new(vec![2, 7, 16]).unwrap();
        assert_eq!(c.mirrored(6).positions(), &[3, 7, 16]);
        assert_eq!(c.mirrored(6).mirrored(6), c);
    }

    #[test]
    fn coupled_system_is_symmetric_and_spd() {
        let model = StructureModel::new(
            BuildingParams::default(),
            DamperParams::default(),
            ModelOptions::default(),
        )
        .unwrap();
        let sys = model.system(&"1-5-9-16".parse().unwrap()).unwrap();
        for m in [&sys.mass, &sys.c_struct, &sys.k_struct, &sys.c_damper, &sys.k_damper] {
            assert_eq!(m, &m.transpose());
        }
        assert!(sys.mass.clone().cholesky().is_some());
        assert!(sys.k_struct.clone().cholesky().is_some());
        let min_eig = |m: &DMatrix<f64>| {
            SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        assert!(min_eig(&sys.c_damper) > -1e-6 * sys.c_damper.amax());
        assert!(min_eig(&sys.k_damper) > -1e-6 * sys.k_damper.amax());
        let no_k = StructureModel::new(
            BuildingParams::default(),
            DamperParams::default(),
            ModelOptions {
                include_damper_stiffness: false,
                ..ModelOptions::default()
            },
        )
        .unwrap();
        let sys = no_k.system(&"1-5".parse().unwrap()).unwrap();
        assert!(sys.k_damper.iter().all(|v| *v == 0.0));
        assert!(sys.c_damper.iter().any(|v| *v != 0.0));
    }

    fn permute_lr(m: &DMatrix<f64>, nf: usize) -> DMatrix<f64> {
        let n = 2 * nf;
        let p = |i: usize| if i < nf { i + nf } else { i - nf };
        DMatrix::from_fn(n, n, |i, j| m[(p(i), p(j))])
    }

    proptest! {
        #[test]
        fn position_count_formula(nf in 2usize..=50) {
            prop_assert_eq!(enumerate_positions(nf).unwrap().len(), 3 * nf - 2);
        }

        #[test]
        fn coupling_rows_sum_to_zero_and_mirror(
            nf in 2usize..9,
            picks in proptest::collection::btree_set(1usize..=25, 0..6),
            unit in any::<bool>(),
        ) {
            let p = BuildingParams::with_floors(nf);
            let links = enumerate_positions(nf).unwrap();
            let positions: Vec<usize> = picks.into_iter().filter(|&i| i <= links.len()).collect();
            let cfg = DamperConfiguration::new(positions).unwrap();
            let dp = DamperParams::default();
            let mode = if unit { Projection::Unit } else { Projection::Axial };
            let (c, k) = assemble_coupling(&cfg, &links, &dp, &p, mode).unwrap();
            let c_eff = 2.0 * dp.c_d;
            for r in 0..2 * nf {
                prop_assert!(c.row(r).sum().abs() <= 1e-9 * c_eff);
                prop_assert!(k.row(r).sum().abs() <= 1e-9 * c_eff);
            }
            prop_assert_eq!(&c, &c.transpose());
            let (cm, km) = assemble_coupling(&cfg.mirrored(nf), &links, &dp, &p, mode).unwrap();
            prop_assert!((permute_lr(&c, nf) - cm).amax() <= 1e-9 * c_eff);
            prop_assert!((permute_lr(&k, nf) - km).amax() <= 1e-9 * c_eff);
        }
    }
}
