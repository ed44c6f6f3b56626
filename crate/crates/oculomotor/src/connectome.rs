//! Builds the four oculomotor sub-networks (horizontal conjugate, vergence,
//! vertical, neck) with their brainstem-style connectivity, merges them with
//! the two retinas' SC layers, and exposes named input ports (SC neurons) and
//! output ports (MN groups per servo axis).
//!
//! Population semantics: each role is a small pool of identical neurons
//! (`population` config key). Pool-to-pool weights are divided by the
//! presynaptic pool size so the class weight is the effective pool-level
//! gain. SC-to-pool weights are per-SC-neuron and scale with the
//! eccentricity profile.

use std::collections::BTreeMap;

use crate::decoder::Axis;
use crate::error::{Error, Result};
use crate::learning::PlasticSynapse;
use crate::plant::Eye;
use crate::retina::{sc_weight, RfGrid, WeightProfile};
use crate::snn::{Network, NeuronParams, Role, Synapse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SubnetKind {
    HorizontalConjugate,
    Vergence,
    Vertical,
    Neck,
}

/// Horizontal movement direction (also the side label of the horizontal
/// sub-networks: the Left network moves both eyes left).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(&self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Vert {
    Up,
    Down,
}

impl Vert {
    pub fn other(&self) -> Vert {
        match self {
            Vert::Up => Vert::Down,
            Vert::Down => Vert::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NeckDir {
    Left,
    Right,
    Up,
    Down,
}

/// Identifies one population (pool) of identical neurons in a blueprint or
/// in the assembled controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PoolTag {
    HLlbn(Side),
    HEbn(Side),
    HIbn(Side),
    HIfn(Side),
    HTn(Side),
    HDsn(Side),
    /// Eye pan motor pool: this eye, moving toward this side.
    HMn(Eye, Side),
    Opn,
    VLlbn(Vert),
    VEbn(Vert),
    VIfn(Vert),
    VTn(Vert),
    /// Shared vertical motor pool driving both eyes' tilt identically.
    VMn(Vert),
    /// Direction-selective S pool; suppresses the conjugate pathway.
    VgS(Side),
    /// Per-eye lateral (dis-conjugate) channel: this eye, moving this side.
    VgEbn(Eye, Side),
    VgIfn(Eye, Side),
    VgTn(Eye, Side),
    VgDsn(Eye, Side),
    NeckMn(NeckDir),
}

impl PoolTag {
    pub fn role(&self) -> Role {
        match self {
            PoolTag::HLlbn(_) | PoolTag::VLlbn(_) => Role::Llbn,
            PoolTag::HEbn(_) | PoolTag::VEbn(_) | PoolTag::VgEbn(..) => Role::Ebn,
            PoolTag::HIbn(_) => Role::Ibn,
            PoolTag::HIfn(_) | PoolTag::VIfn(_) | PoolTag::VgIfn(..) => Role::Ifn,
            PoolTag::HTn(_) | PoolTag::VTn(_) | PoolTag::VgTn(..) => Role::Tn,
            PoolTag::HDsn(_) | PoolTag::VgDsn(..) => Role::Dsn,
            PoolTag::HMn(..) | PoolTag::VMn(_) | PoolTag::NeckMn(_) => Role::Mn,
            PoolTag::Opn => Role::Opn,
            // S neurons are direction-selective burst cells
            PoolTag::VgS(_) => Role::Ebn,
        }
    }

    fn kind(&self) -> SubnetKind {
        match self {
            PoolTag::HLlbn(_) | PoolTag::HEbn(_) | PoolTag::HIbn(_) | PoolTag::HIfn(_)
            | PoolTag::HTn(_) | PoolTag::HDsn(_) | PoolTag::HMn(..) | PoolTag::Opn => {
                SubnetKind::HorizontalConjugate
            }
            PoolTag::VLlbn(_) | PoolTag::VEbn(_) | PoolTag::VIfn(_) | PoolTag::VTn(_)
            | PoolTag::VMn(_) => SubnetKind::Vertical,
            PoolTag::VgS(_) | PoolTag::VgEbn(..) | PoolTag::VgIfn(..) | PoolTag::VgTn(..)
            | PoolTag::VgDsn(..) => SubnetKind::Vergence,
            PoolTag::NeckMn(_) => SubnetKind::Neck,
        }
    }
}

/// Default membrane parameters per role.
#[derive(Debug, Clone, Copy)]
pub struct NeuronDefaults {
    pub tau_m_ms: f64,
    pub threshold: f64,
    pub reset: f64,
    pub refractory_ms: f64,
    pub sc_refractory_ms: f64,
    pub tn_leak_scale: f64,
    pub opn_bias: f64,
    pub initial_stagger: bool,
}

impl NeuronDefaults {
    pub fn make(&self, role: Role) -> NeuronParams {
        NeuronParams {
            role,
            tau_m_ms: self.tau_m_ms,
            threshold: self.threshold,
            reset: self.reset,
            refractory_ms: match role {
                Role::Sc => self.sc_refractory_ms,
                _ => self.refractory_ms,
            },
            bias: match role {
                Role::Opn => self.opn_bias,
                _ => 0.0,
            },
            leak_scale: match role {
                Role::Tn => self.tn_leak_scale,
                _ => 1.0,
            },
        }
    }
}

/// All connectome edge-class weights and gains. Signs are part of the class
/// definition and validated at build time.
#[derive(Debug, Clone, Copy)]
pub struct ConnectomeParams {
    pub population: usize,
    pub default_delay_ms: f64,
    pub llbn_ebn_delay_ms: f64,
    pub sc_llbn_gain: f64,
    pub sc_ebn_gain: f64,
    pub sc_llbn_gain_v: f64,
    pub sc_ebn_gain_v: f64,
    pub llbn_ebn_weight: f64,
    pub ebn_ifn_weight: f64,
    pub ifn_llbn_weight: f64,
    pub ebn_tn_weight: f64,
    pub tn_mn_weight: f64,
    pub tn_dsn_weight: f64,
    pub tn_dsn_contra_weight: f64,
    pub dsn_mn_weight: f64,
    pub ebn_ibn_weight: f64,
    pub ibn_contra_weight: f64,
    pub ibn_opn_weight: f64,
    pub opn_ibn_weight: f64,
    pub opn_ebn_weight: f64,
    pub sc_opn_fovea_weight: f64,
    /// Weak gaze drive from foveal RFs; sustains fixation readjustment
    /// (microsaccades) while the OPN gate damps full saccades.
    pub sc_fovea_gaze_gain: f64,
    pub neck_gain: f64,
    pub verg_s_gain: f64,
    pub verg_ebn_gain: f64,
    pub verg_s_dsn_weight: f64,
    pub verg_ebn_ifn_weight: f64,
    pub verg_ifn_ebn_weight: f64,
    pub verg_ebn_tn_weight: f64,
    pub verg_tn_dsn_weight: f64,
    pub verg_dsn_mn_weight: f64,
}

impl ConnectomeParams {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::config("connectome", "population must be >= 1"));
        }
        let excitatory = [
            ("sc_llbn_gain", self.sc_llbn_gain),
            ("sc_ebn_gain", self.sc_ebn_gain),
            ("sc_llbn_gain_v", self.sc_llbn_gain_v),
            ("sc_ebn_gain_v", self.sc_ebn_gain_v),
            ("llbn_ebn_weight", self.llbn_ebn_weight),
            ("ebn_ifn_weight", self.ebn_ifn_weight),
            ("ebn_tn_weight", self.ebn_tn_weight),
            ("tn_mn_weight", self.tn_mn_weight),
            ("tn_dsn_weight", self.tn_dsn_weight),
            ("dsn_mn_weight", self.dsn_mn_weight),
            ("ebn_ibn_weight", self.ebn_ibn_weight),
            ("sc_opn_fovea_weight", self.sc_opn_fovea_weight),
            ("sc_fovea_gaze_gain", self.sc_fovea_gaze_gain),
            ("neck_gain", self.neck_gain),
            ("verg_s_gain", self.verg_s_gain),
            ("verg_ebn_gain", self.verg_ebn_gain),
            ("verg_ebn_ifn_weight", self.verg_ebn_ifn_weight),
            ("verg_ebn_tn_weight", self.verg_ebn_tn_weight),
            ("verg_tn_dsn_weight", self.verg_tn_dsn_weight),
            ("verg_dsn_mn_weight", self.verg_dsn_mn_weight),
        ];
        for (name, w) in excitatory {
            if w < 0.0 {
                return Err(Error::config("connectome", format!("{name} must be >= 0")));
            }
        }
        let inhibitory = [
            ("ifn_llbn_weight", self.ifn_llbn_weight),
            ("tn_dsn_contra_weight", self.tn_dsn_contra_weight),
            ("ibn_contra_weight", self.ibn_contra_weight),
            ("ibn_opn_weight", self.ibn_opn_weight),
            ("opn_ibn_weight", self.opn_ibn_weight),
            ("opn_ebn_weight", self.opn_ebn_weight),
            ("verg_s_dsn_weight", self.verg_s_dsn_weight),
            ("verg_ifn_ebn_weight", self.verg_ifn_ebn_weight),
        ];
        for (name, w) in inhibitory {
            if w > 0.0 {
                return Err(Error::config("connectome", format!("{name} must be <= 0")));
            }
        }
        Ok(())
    }
}

/// One sub-network before assembly: pools (local ids), internal synapses.
#[derive(Debug, Clone)]
pub struct SubnetworkBlueprint {
    pub kind: SubnetKind,
    pub neurons: Vec<NeuronParams>,
    pub roster: BTreeMap<PoolTag, Vec<u32>>,
    pub synapses: Vec<Synapse>,
}

struct BlueprintBuilder<'a> {
    kind: SubnetKind,
    defaults: &'a NeuronDefaults,
    p: &'a ConnectomeParams,
    neurons: Vec<NeuronParams>,
    roster: BTreeMap<PoolTag, Vec<u32>>,
    synapses: Vec<Synapse>,
}

impl<'a> BlueprintBuilder<'a> {
    fn new(kind: SubnetKind, defaults: &'a NeuronDefaults, p: &'a ConnectomeParams) -> Self {
        BlueprintBuilder {
            kind,
            defaults,
            p,
            neurons: Vec::new(),
            roster: BTreeMap::new(),
            synapses: Vec::new(),
        }
    }

    fn pool(&mut self, tag: PoolTag) -> Vec<u32> {
        debug_assert_eq!(tag.kind(), self.kind);
        let ids: Vec<u32> = (0..self.p.population)
            .map(|_| {
                let id = self.neurons.len() as u32;
                self.neurons.push(self.defaults.make(tag.role()));
                id
            })
            .collect();
        self.roster.insert(tag, ids.clone());
        ids
    }

    /// Pool-to-pool connection; the class weight is divided by the
    /// presynaptic pool size.
    fn connect(&mut self, pre: PoolTag, post: PoolTag, weight: f64, delay_ms: f64) {
        let pre_ids = self.roster[&pre].clone();
        let post_ids = self.roster[&post].clone();
        let w = weight / pre_ids.len() as f64;
        for &a in &pre_ids {
            for &b in &post_ids {
                self.synapses.push(Synapse {
                    pre: a,
                    post: b,
                    weight: w,
                    delay_ms,
                    plastic: false,
                });
            }
        }
    }

    fn finish(self) -> SubnetworkBlueprint {
        SubnetworkBlueprint {
            kind: self.kind,
            neurons: self.neurons,
            roster: self.roster,
            synapses: self.synapses,
        }
    }
}

/// Build one sub-network blueprint with the connectivity of its kind.
pub fn build_subnetwork(
    kind: SubnetKind,
    defaults: &NeuronDefaults,
    p: &ConnectomeParams,
) -> Result<SubnetworkBlueprint> {
    p.validate()?;
    let mut b = BlueprintBuilder::new(kind, defaults, p);
    let d = p.default_delay_ms;
    match kind {
        SubnetKind::HorizontalConjugate => {
            for side in [Side::Left, Side::Right] {
                b.pool(PoolTag::HLlbn(side));
                b.pool(PoolTag::HEbn(side));
                b.pool(PoolTag::HIbn(side));
                b.pool(PoolTag::HIfn(side));
                b.pool(PoolTag::HTn(side));
                b.pool(PoolTag::HDsn(side));
                b.pool(PoolTag::HMn(Eye::Left, side));
                b.pool(PoolTag::HMn(Eye::Right, side));
            }
            b.pool(PoolTag::Opn);
            for side in [Side::Left, Side::Right] {
                let contra = side.other();
                b.connect(PoolTag::HLlbn(side), PoolTag::HEbn(side), p.llbn_ebn_weight, p.llbn_ebn_delay_ms);
                b.connect(PoolTag::HEbn(side), PoolTag::HIfn(side), p.ebn_ifn_weight, d);
                b.connect(PoolTag::HIfn(side), PoolTag::HLlbn(side), p.ifn_llbn_weight, d);
                b.connect(PoolTag::HEbn(side), PoolTag::HTn(side), p.ebn_tn_weight, d);
                for eye in [Eye::Left, Eye::Right] {
                    b.connect(PoolTag::HTn(side), PoolTag::HMn(eye, side), p.tn_mn_weight, d);
                    b.connect(PoolTag::HDsn(side), PoolTag::HMn(eye, side), p.dsn_mn_weight, d);
                }
                b.connect(PoolTag::HTn(side), PoolTag::HDsn(side), p.tn_dsn_weight, d);
                b.connect(PoolTag::HTn(side), PoolTag::HDsn(contra), p.tn_dsn_contra_weight, d);
                b.connect(PoolTag::HEbn(side), PoolTag::HIbn(side), p.ebn_ibn_weight, d);
                b.connect(PoolTag::HIbn(side), PoolTag::HEbn(contra), p.ibn_contra_weight, d);
                b.connect(PoolTag::HIbn(side), PoolTag::HIbn(contra), p.ibn_contra_weight, d);
                b.connect(PoolTag::HIbn(side), PoolTag::HIfn(contra), p.ibn_contra_weight, d);
                b.connect(PoolTag::HIbn(side), PoolTag::HTn(contra), p.ibn_contra_weight, d);
                b.connect(PoolTag::HIbn(side), PoolTag::Opn, p.ibn_opn_weight, d);
                b.connect(PoolTag::Opn, PoolTag::HIbn(side), p.opn_ibn_weight, d);
                b.connect(PoolTag::Opn, PoolTag::HEbn(side), p.opn_ebn_weight, d);
            }
        }
        SubnetKind::Vertical => {
            for dir in [Vert::Up, Vert::Down] {
                b.pool(PoolTag::VLlbn(dir));
                b.pool(PoolTag::VEbn(dir));
                b.pool(PoolTag::VIfn(dir));
                b.pool(PoolTag::VTn(dir));
                b.pool(PoolTag::VMn(dir));
            }
            for dir in [Vert::Up, Vert::Down] {
                b.connect(PoolTag::VLlbn(dir), PoolTag::VEbn(dir), p.llbn_ebn_weight, p.llbn_ebn_delay_ms);
                b.connect(PoolTag::VEbn(dir), PoolTag::VIfn(dir), p.ebn_ifn_weight, d);
                b.connect(PoolTag::VIfn(dir), PoolTag::VLlbn(dir), p.ifn_llbn_weight, d);
                b.connect(PoolTag::VEbn(dir), PoolTag::VTn(dir), p.ebn_tn_weight, d);
                b.connect(PoolTag::VTn(dir), PoolTag::VMn(dir), p.tn_mn_weight, d);
            }
        }
        SubnetKind::Vergence => {
            // one lateral channel per (eye, direction); the DSN combines the
            // ipsilateral eye's drive with inhibition from the other eye's
            // same-direction channel, so conjugate errors cancel here and
            // only dis-conjugate (crossed) errors move the eyes apart
            for side in [Side::Left, Side::Right] {
                b.pool(PoolTag::VgS(side));
                for eye in [Eye::Left, Eye::Right] {
                    b.pool(PoolTag::VgEbn(eye, side));
                    b.pool(PoolTag::VgIfn(eye, side));
                    b.pool(PoolTag::VgTn(eye, side));
                    b.pool(PoolTag::VgDsn(eye, side));
                }
            }
            for side in [Side::Left, Side::Right] {
                for eye in [Eye::Left, Eye::Right] {
                    let other = match eye {
                        Eye::Left => Eye::Right,
                        Eye::Right => Eye::Left,
                    };
                    b.connect(PoolTag::VgEbn(eye, side), PoolTag::VgIfn(eye, side), p.verg_ebn_ifn_weight, d);
                    b.connect(PoolTag::VgIfn(eye, side), PoolTag::VgEbn(eye, side), p.verg_ifn_ebn_weight, d);
                    b.connect(PoolTag::VgEbn(eye, side), PoolTag::VgTn(eye, side), p.verg_ebn_tn_weight, d);
                    b.connect(PoolTag::VgTn(eye, side), PoolTag::VgDsn(eye, side), p.verg_tn_dsn_weight, d);
                    b.connect(PoolTag::VgTn(other, side), PoolTag::VgDsn(eye, side), -p.verg_tn_dsn_weight, d);
                }
            }
        }
        SubnetKind::Neck => {
            // direct SC -> MN only; SC attachment happens at assembly
            for dir in [NeckDir::Left, NeckDir::Right, NeckDir::Up, NeckDir::Down] {
                b.pool(PoolTag::NeckMn(dir));
            }
        }
    }
    Ok(b.finish())
}

/// The assembled controller: merged network, SC port map, MN output groups
/// and the plastic-synapse registry.
#[derive(Debug, Clone)]
pub struct ControllerAssembly {
    pub network: Network,
    pub grid: RfGrid,
    pub profile: WeightProfile,
    pub n_rf: u32,
    /// Global ids per pool.
    pub pools: BTreeMap<PoolTag, Vec<u32>>,
    /// Plastic SC->LLBN / SC->EBN synapses (bounds filled by the learning
    /// engine from its scale config).
    pub plastic: Vec<PlasticSynapse>,
    /// Per-(eye, rf) count of outgoing routes, for the totality contract.
    route_counts: Vec<u32>,
}

impl ControllerAssembly {
    /// How many distinct routes the given SC neuron has into sub-networks.
    pub fn route_count(&self, sc: u32) -> u32 {
        self.route_counts[sc as usize]
    }
}

impl ControllerAssembly {
    /// SC neuron id for a receptive field of one eye. SC ids occupy the
    /// front of the id space: left eye first, then right eye.
    pub fn sc_id(&self, eye: Eye, rf: u32) -> u32 {
        match eye {
            Eye::Left => rf,
            Eye::Right => self.n_rf + rf,
        }
    }

    pub fn n_neurons(&self) -> usize {
        self.network.n_neurons()
    }

    /// MN pools feeding one axis, (negative-direction, positive-direction).
    pub fn mn_groups(&self, axis: Axis) -> (&[u32], &[u32]) {
        let g = |tag: PoolTag| self.pools[&tag].as_slice();
        match axis {
            Axis::LeftPan => (g(PoolTag::HMn(Eye::Left, Side::Left)), g(PoolTag::HMn(Eye::Left, Side::Right))),
            Axis::RightPan => (g(PoolTag::HMn(Eye::Right, Side::Left)), g(PoolTag::HMn(Eye::Right, Side::Right))),
            Axis::LeftTilt | Axis::RightTilt => (g(PoolTag::VMn(Vert::Down)), g(PoolTag::VMn(Vert::Up))),
            Axis::NeckPan => (g(PoolTag::NeckMn(NeckDir::Left)), g(PoolTag::NeckMn(NeckDir::Right))),
            Axis::NeckTilt => (g(PoolTag::NeckMn(NeckDir::Down)), g(PoolTag::NeckMn(NeckDir::Up))),
        }
    }

    /// Neuron id under the build-time mirror symmetry (stimulus mirrored
    /// about the vertical midline: eyes swap, hemifields swap).
    pub fn mirror_neuron_id(&self, id: u32) -> u32 {
        if id < 2 * self.n_rf {
            let (eye, rf) = if id < self.n_rf {
                (Eye::Left, id)
            } else {
                (Eye::Right, id - self.n_rf)
            };
            let m_eye = match eye {
                Eye::Left => Eye::Right,
                Eye::Right => Eye::Left,
            };
            return self.sc_id(m_eye, self.grid.mirror_id(rf));
        }
        for (tag, ids) in &self.pools {
            if let Some(k) = ids.iter().position(|&n| n == id) {
                let m_tag = mirror_tag(*tag);
                return self.pools[&m_tag][k];
            }
        }
        unreachable!("id {id} not in any pool")
    }

    /// Columnar connectome dump: pre role/id, post role/id, weight, delay,
    /// plastic flag.
    pub fn dump_edges(&self) -> String {
        let mut out = String::from("pre_role pre_id post_role post_id weight delay_ms plastic\n");
        for syn in self.network.synapses() {
            let pre_role = self.network.params(syn.pre).role;
            let post_role = self.network.params(syn.post).role;
            out.push_str(&format!(
                "{} {} {} {} {:.6} {} {}\n",
                pre_role.as_str(),
                syn.pre,
                post_role.as_str(),
                syn.post,
                syn.weight,
                syn.delay_ms,
                if syn.plastic { 1 } else { 0 }
            ));
        }
        out
    }
}

fn mirror_tag(tag: PoolTag) -> PoolTag {
    let m_eye = |e: Eye| match e {
        Eye::Left => Eye::Right,
        Eye::Right => Eye::Left,
    };
    match tag {
        PoolTag::HLlbn(s) => PoolTag::HLlbn(s.other()),
        PoolTag::HEbn(s) => PoolTag::HEbn(s.other()),
        PoolTag::HIbn(s) => PoolTag::HIbn(s.other()),
        PoolTag::HIfn(s) => PoolTag::HIfn(s.other()),
        PoolTag::HTn(s) => PoolTag::HTn(s.other()),
        PoolTag::HDsn(s) => PoolTag::HDsn(s.other()),
        PoolTag::HMn(e, s) => PoolTag::HMn(m_eye(e), s.other()),
        PoolTag::Opn => PoolTag::Opn,
        PoolTag::VLlbn(v) => PoolTag::VLlbn(v),
        PoolTag::VEbn(v) => PoolTag::VEbn(v),
        PoolTag::VIfn(v) => PoolTag::VIfn(v),
        PoolTag::VTn(v) => PoolTag::VTn(v),
        PoolTag::VMn(v) => PoolTag::VMn(v),
        PoolTag::VgS(s) => PoolTag::VgS(s.other()),
        PoolTag::VgEbn(e, s) => PoolTag::VgEbn(m_eye(e), s.other()),
        PoolTag::VgIfn(e, s) => PoolTag::VgIfn(m_eye(e), s.other()),
        PoolTag::VgTn(e, s) => PoolTag::VgTn(m_eye(e), s.other()),
        PoolTag::VgDsn(e, s) => PoolTag::VgDsn(m_eye(e), s.other()),
        PoolTag::NeckMn(d) => PoolTag::NeckMn(match d {
            NeckDir::Left => NeckDir::Right,
            NeckDir::Right => NeckDir::Left,
            other => other,
        }),
    }
}

/// Merge the blueprints with the two retinas' SC layers into one network,
/// route every receptive field, and register the plastic synapses.
pub fn assemble_controller(
    grid: RfGrid,
    profile: WeightProfile,
    defaults: &NeuronDefaults,
    p: &ConnectomeParams,
    dt_ms: f64,
) -> Result<ControllerAssembly> {
    profile.validate()?;
    p.validate()?;
    let n_rf = grid.rfs.len() as u32;
    let mut neurons: Vec<NeuronParams> = Vec::new();
    // SC layer first: left eye then right eye, rf-id order
    for _eye in 0..2 {
        for _rf in 0..n_rf {
            neurons.push(defaults.make(Role::Sc));
        }
    }

    let mut synapses: Vec<Synapse> = Vec::new();
    let mut pools: BTreeMap<PoolTag, Vec<u32>> = BTreeMap::new();
    for kind in [
        SubnetKind::HorizontalConjugate,
        SubnetKind::Vertical,
        SubnetKind::Vergence,
        SubnetKind::Neck,
    ] {
        let bp = build_subnetwork(kind, defaults, p)?;
        let offset = neurons.len() as u32;
        neurons.extend(bp.neurons.iter().copied());
        for (tag, ids) in &bp.roster {
            pools.insert(*tag, ids.iter().map(|&i| i + offset).collect());
        }
        for syn in &bp.synapses {
            synapses.push(Synapse {
                pre: syn.pre + offset,
                post: syn.post + offset,
                ..*syn
            });
        }
    }

    // cross-subnetwork edges: vergence S inhibition of the conjugate path,
    // and the vergence DSN drive of the lateral eye MN pools
    let d = p.default_delay_ms;
    let pop = p.population as f64;
    let cross = |pre_tag: PoolTag, post_tag: PoolTag, weight: f64, syns: &mut Vec<Synapse>| {
        let w = weight / pop;
        for &a in &pools[&pre_tag] {
            for &b in &pools[&post_tag] {
                syns.push(Synapse { pre: a, post: b, weight: w, delay_ms: d, plastic: false });
            }
        }
    };
    for side in [Side::Left, Side::Right] {
        // S suppresses the conjugate pathway during dis-conjugate episodes
        cross(PoolTag::VgS(side), PoolTag::HDsn(Side::Left), p.verg_s_dsn_weight, &mut synapses);
        cross(PoolTag::VgS(side), PoolTag::HDsn(Side::Right), p.verg_s_dsn_weight, &mut synapses);
        for eye in [Eye::Left, Eye::Right] {
            cross(PoolTag::VgDsn(eye, side), PoolTag::HMn(eye, side), p.verg_dsn_mn_weight, &mut synapses);
        }
    }

    // SC routing
    let mut plastic: Vec<PlasticSynapse> = Vec::new();
    let mut route_counts = vec![0u32; 2 * n_rf as usize];
    let fovea_half = grid.spec.fovea_half_width as f64;
    for eye_idx in 0..2u32 {
        for rf in &grid.rfs {
            let sc = eye_idx * n_rf + rf.id;
            let slot = sc as usize;
            let attach = |tag: PoolTag, weight: f64, plastic_edge: bool,
                              synapses: &mut Vec<Synapse>,
                              plastic_reg: &mut Vec<PlasticSynapse>,
                              route_counts: &mut Vec<u32>| {
                for &post in &pools[&tag] {
                    let idx = synapses.len();
                    synapses.push(Synapse {
                        pre: sc,
                        post,
                        weight,
                        delay_ms: d,
                        plastic: plastic_edge,
                    });
                    if plastic_edge {
                        plastic_reg.push(PlasticSynapse {
                            syn_index: idx,
                            pre: sc,
                            post,
                            w_lo: 0.0,
                            w_hi: f64::INFINITY,
                        });
                    }
                }
                route_counts[slot] += 1;
            };
            let side = if rf.left { Side::Left } else { Side::Right };
            let vert = if rf.upper { Vert::Up } else { Vert::Down };
            let w_h = sc_weight(rf.dx.abs(), &profile);
            let w_v = sc_weight(rf.dy.abs(), &profile);
            if rf.ecc <= fovea_half {
                // foveal RFs hold fixation: they drive the omnipause gate,
                // plus a weak sided horizontal drive that dithers the eye
                // around the target (microsaccadic readjustment). The OPN
                // gate keeps the dither small; the ungated vertical channel
                // gets no foveal drive. An exactly centered dot activates
                // mirror-symmetric foveal sets, so the weak drives cancel
                // and the decoded deltas stay zero.
                attach(PoolTag::Opn, p.sc_opn_fovea_weight / pop, false,
                       &mut synapses, &mut plastic, &mut route_counts);
                attach(PoolTag::HLlbn(side), w_h * p.sc_fovea_gaze_gain, false,
                       &mut synapses, &mut plastic, &mut route_counts);
                attach(PoolTag::HEbn(side), w_h * p.sc_fovea_gaze_gain, false,
                       &mut synapses, &mut plastic, &mut route_counts);
                continue;
            }
            attach(PoolTag::HLlbn(side), w_h * p.sc_llbn_gain, true,
                   &mut synapses, &mut plastic, &mut route_counts);
            attach(PoolTag::HEbn(side), w_h * p.sc_ebn_gain, true,
                   &mut synapses, &mut plastic, &mut route_counts);
            attach(PoolTag::VLlbn(vert), w_v * p.sc_llbn_gain_v, true,
                   &mut synapses, &mut plastic, &mut route_counts);
            attach(PoolTag::VEbn(vert), w_v * p.sc_ebn_gain_v, true,
                   &mut synapses, &mut plastic, &mut route_counts);
            let this_eye = if eye_idx == 0 { Eye::Left } else { Eye::Right };
            attach(PoolTag::VgEbn(this_eye, side), w_h * p.verg_ebn_gain, false,
                   &mut synapses, &mut plastic, &mut route_counts);
            attach(PoolTag::VgS(Side::Left), w_h * p.verg_s_gain, false,
                   &mut synapses, &mut plastic, &mut route_counts);
            attach(PoolTag::VgS(Side::Right), w_h * p.verg_s_gain, false,
                   &mut synapses, &mut plastic, &mut route_counts);
            if rf.peripheral {
                let neck_h = match side {
                    Side::Left => NeckDir::Left,
                    Side::Right => NeckDir::Right,
                };
                let neck_v = match vert {
                    Vert::Up => NeckDir::Up,
                    Vert::Down => NeckDir::Down,
                };
                attach(PoolTag::NeckMn(neck_h), w_h * p.neck_gain, false,
                       &mut synapses, &mut plastic, &mut route_counts);
                attach(PoolTag::NeckMn(neck_v), w_v * p.neck_gain, false,
                       &mut synapses, &mut plastic, &mut route_counts);
            }
        }
    }
    if let Some(unrouted) = route_counts.iter().position(|&c| c == 0) {
        return Err(Error::config(
            "connectome",
            format!("SC neuron {unrouted} has no route into any sub-network"),
        ));
    }

    let mut network = Network::new(neurons, synapses, dt_ms)?;
    if defaults.initial_stagger {
        // deterministic phase offsets inside each pool; identical offsets on
        // mirrored pools keep the build symmetric
        for ids in pools.values() {
            let n = ids.len();
            for (k, &id) in ids.iter().enumerate() {
                let v = defaults.reset
                    + (defaults.threshold - defaults.reset) * 0.5 * k as f64 / n as f64;
                network.set_initial_potential(id, v);
            }
        }
    }

    Ok(ControllerAssembly {
        network,
        grid,
        profile,
        n_rf,
        pools,
        plastic,
        route_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retina::{build_rf_grid, default_ring_spec, FrameSpec};

    pub(crate) fn defaults() -> NeuronDefaults {
        NeuronDefaults {
            tau_m_ms: 20.0,
            threshold: 1.0,
            reset: 0.0,
            refractory_ms: 2.0,
            sc_refractory_ms: 4.0,
            tn_leak_scale: 0.02,
            opn_bias: 0.127,
            initial_stagger: true,
        }
    }

    pub(crate) fn params() -> ConnectomeParams {
        ConnectomeParams {
            population: 5,
            default_delay_ms: 1.0,
            llbn_ebn_delay_ms: 5.0,
            sc_llbn_gain: 1.0,
            sc_ebn_gain: 1.0,
            sc_llbn_gain_v: 1.0,
            sc_ebn_gain_v: 1.0,
            llbn_ebn_weight: 0.10,
            ebn_ifn_weight: 0.20,
            ifn_llbn_weight: -0.40,
            ebn_tn_weight: 0.08,
            tn_mn_weight: 0.15,
            tn_dsn_weight: 0.40,
            tn_dsn_contra_weight: -0.40,
            dsn_mn_weight: 0.30,
            ebn_ibn_weight: 0.30,
            ibn_contra_weight: -0.50,
            ibn_opn_weight: -0.60,
            opn_ibn_weight: -0.30,
            opn_ebn_weight: -0.30,
            sc_opn_fovea_weight: 0.10,
            sc_fovea_gaze_gain: 0.3,
            neck_gain: 0.10,
            verg_s_gain: 0.05,
            verg_ebn_gain: 0.05,
            verg_s_dsn_weight: -0.05,
            verg_ebn_ifn_weight: 0.20,
            verg_ifn_ebn_weight: -0.40,
            verg_ebn_tn_weight: 0.05,
            verg_tn_dsn_weight: 0.20,
            verg_dsn_mn_weight: 0.05,
        }
    }

    fn assembly() -> ControllerAssembly {
        let spec = FrameSpec { width: 720, height: 480, fovea_half_width: 30 };
        let grid = build_rf_grid(&spec, &default_ring_spec((60, 10), (200, 20), 40), 240.0).unwrap();
        let profile = WeightProfile { w_min: 0.05, w_max: 0.5, d_sat_px: 360.0 };
        assemble_controller(grid, profile, &defaults(), &params(), 1.0).unwrap()
    }

    #[test]
    fn vertical_roster_has_no_ibn_opn_dsn() {
        let bp = build_subnetwork(SubnetKind::Vertical, &defaults(), &params()).unwrap();
        for tag in bp.roster.keys() {
            assert!(
                !matches!(tag.role(), Role::Ibn | Role::Opn | Role::Dsn),
                "{tag:?} in vertical roster"
            );
        }
        for dir in [Vert::Up, Vert::Down] {
            for tag in [PoolTag::VLlbn(dir), PoolTag::VEbn(dir), PoolTag::VIfn(dir), PoolTag::VTn(dir), PoolTag::VMn(dir)] {
                assert!(bp.roster.contains_key(&tag));
            }
        }
    }

    #[test]
    fn horizontal_has_contralateral_ibn_inhibition() {
        let bp = build_subnetwork(SubnetKind::HorizontalConjugate, &defaults(), &params()).unwrap();
        let ibn_left = &bp.roster[&PoolTag::HIbn(Side::Left)];
        let ebn_right = &bp.roster[&PoolTag::HEbn(Side::Right)];
        let found = bp.synapses.iter().any(|s| {
            ibn_left.contains(&s.pre) && ebn_right.contains(&s.post) && s.weight < 0.0
        });
        assert!(found, "missing IBN_left -> EBN_right inhibition");
    }

    #[test]
    fn neck_blueprint_is_mn_only() {
        let bp = build_subnetwork(SubnetKind::Neck, &defaults(), &params()).unwrap();
        assert!(bp.synapses.is_empty());
        assert!(bp.roster.keys().all(|t| t.role() == Role::Mn));
        assert_eq!(bp.roster.len(), 4);
    }

    #[test]
    fn vergence_has_bilateral_s_neurons() {
        let a = assembly();
        // every non-foveal RF feeds both VgS pools (inputs from both sides)
        let s_left = &a.pools[&PoolTag::VgS(Side::Left)];
        let s_right = &a.pools[&PoolTag::VgS(Side::Right)];
        let rf = a.grid.rfs.iter().find(|r| !a.grid.is_foveal(r.id)).unwrap();
        let sc = a.sc_id(Eye::Left, rf.id);
        for pool in [s_left, s_right] {
            assert!(a
                .network
                .synapses()
                .iter()
                .any(|s| s.pre == sc && pool.contains(&s.post)));
        }
    }

    #[test]
    fn vergence_dsn_has_contralateral_eye_inhibition() {
        let bp = build_subnetwork(SubnetKind::Vergence, &defaults(), &params()).unwrap();
        let tn_right_eye = &bp.roster[&PoolTag::VgTn(Eye::Right, Side::Right)];
        let dsn_left_eye = &bp.roster[&PoolTag::VgDsn(Eye::Left, Side::Right)];
        let found = bp.synapses.iter().any(|s| {
            tn_right_eye.contains(&s.pre) && dsn_left_eye.contains(&s.post) && s.weight < 0.0
        });
        assert!(found, "missing cross-eye vergence inhibition");
    }

    #[test]
    fn routing_is_total() {
        let a = assembly();
        assert!(a.route_counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn mn_groups_disjoint_across_axes() {
        let a = assembly();
        use crate::decoder::AXES;
        let mut seen: Vec<(Vec<u32>, Axis)> = Vec::new();
        for axis in AXES {
            let (neg, pos) = a.mn_groups(axis);
            for group in [neg, pos] {
                for (prev, prev_axis) in &seen {
                    // the two tilt axes share the vertical pools by design
                    let tilt_pair = matches!(
                        (axis, prev_axis),
                        (Axis::RightTilt, Axis::LeftTilt) | (Axis::LeftTilt, Axis::RightTilt)
                    );
                    if !tilt_pair {
                        assert!(
                            group.iter().all(|id| !prev.contains(id)),
                            "{axis:?} shares MNs with {prev_axis:?}"
                        );
                    }
                }
                seen.push((group.to_vec(), axis));
            }
        }
    }

    #[test]
    fn build_is_mirror_symmetric() {
        let a = assembly();
        let mut edges: Vec<(u32, u32, u64, u64)> = a
            .network
            .synapses()
            .iter()
            .map(|s| (s.pre, s.post, s.weight.to_bits(), s.delay_ms.to_bits()))
            .collect();
        let mut mirrored: Vec<(u32, u32, u64, u64)> = a
            .network
            .synapses()
            .iter()
            .map(|s| {
                (
                    a.mirror_neuron_id(s.pre),
                    a.mirror_neuron_id(s.post),
                    s.weight.to_bits(),
                    s.delay_ms.to_bits(),
                )
            })
            .collect();
        edges.sort_unstable();
        mirrored.sort_unstable();
        assert_eq!(edges, mirrored);
    }

    #[test]
    fn neck_connections_are_peripheral_sc_to_mn_only() {
        let a = assembly();
        let neck_ids: Vec<u32> = [NeckDir::Left, NeckDir::Right, NeckDir::Up, NeckDir::Down]
            .iter()
            .flat_map(|&dir| a.pools[&PoolTag::NeckMn(dir)].clone())
            .collect();
        for syn in a.network.synapses() {
            if neck_ids.contains(&syn.post) {
                assert!(syn.pre < 2 * a.n_rf, "non-SC input to neck MN");
                let rf = (syn.pre % a.n_rf) as usize;
                assert!(a.grid.rfs[rf].peripheral, "non-peripheral SC drives neck");
                assert!(syn.weight > 0.0);
            }
            assert!(!neck_ids.contains(&syn.pre), "neck MN has outgoing synapse");
        }
    }

    #[test]
    fn plastic_registry_is_sc_gain_map_only() {
        let a = assembly();
        assert!(!a.plastic.is_empty());
        for ps in &a.plastic {
            assert!(ps.pre < 2 * a.n_rf);
            let role = a.network.params(ps.post).role;
            assert!(matches!(role, Role::Llbn | Role::Ebn));
            assert_eq!(a.network.synapses()[ps.syn_index].pre, ps.pre);
            assert_eq!(a.network.synapses()[ps.syn_index].post, ps.post);
            assert!(a.network.synapses()[ps.syn_index].plastic);
        }
        // vergence EBNs receive only non-plastic SC input
        for syn in a.network.synapses() {
            if syn.plastic {
                assert!(syn.pre < 2 * a.n_rf);
            }
        }
    }

    #[test]
    fn sign_validation_rejects_flipped_class() {
        let mut p = params();
        p.opn_ebn_weight = 0.2;
        assert!(p.validate().is_err());
        let mut p = params();
        p.ebn_tn_weight = -0.1;
        assert!(p.validate().is_err());
    }
}
