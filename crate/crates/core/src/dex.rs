//! Static game data: types, the effectiveness chart, moves, species and the draft pool.
//!
//! A [`Dex`] is immutable once loaded. Loading validates every entry and reports
//! all problems at once instead of stopping at the first one.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The dex shipped with the crate.
pub const BUNDLED_DEX_JSON: &str = include_str!("../data/dex.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeId {
    Normal,
    Fire,
    Water,
    Electric,
    Grass,
    Ice,
    Fighting,
    Poison,
    Ground,
    Flying,
    Psychic,
    Bug,
    Rock,
    Ghost,
    Dragon,
    Dark,
    Steel,
    Fairy,
}

impl TypeId {
    pub const COUNT: usize = 18;

    pub const ALL: [TypeId; Self::COUNT] = [
        TypeId::Normal,
        TypeId::Fire,
        TypeId::Water,
        TypeId::Electric,
        TypeId::Grass,
        TypeId::Ice,
        TypeId::Fighting,
        TypeId::Poison,
        TypeId::Ground,
        TypeId::Flying,
        TypeId::Psychic,
        TypeId::Bug,
        TypeId::Rock,
        TypeId::Ghost,
        TypeId::Dragon,
        TypeId::Dark,
        TypeId::Steel,
        TypeId::Fairy,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TypeId::Normal => "Normal",
            TypeId::Fire => "Fire",
            TypeId::Water => "Water",
            TypeId::Electric => "Electric",
            TypeId::Grass => "Grass",
            TypeId::Ice => "Ice",
            TypeId::Fighting => "Fighting",
            TypeId::Poison => "Poison",
            TypeId::Ground => "Ground",
            TypeId::Flying => "Flying",
            TypeId::Psychic => "Psychic",
            TypeId::Bug => "Bug",
            TypeId::Rock => "Rock",
            TypeId::Ghost => "Ghost",
            TypeId::Dragon => "Dragon",
            TypeId::Dark => "Dark",
            TypeId::Steel => "Steel",
            TypeId::Fairy => "Fairy",
        }
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown type name '{0}'")]
pub struct UnknownType(pub String);

impl FromStr for TypeId {
    type Err = UnknownType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TypeId::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownType(s.to_string()))
    }
}

/// A damage multiplier stored in quarter steps, so every legal value
/// (0, 0.25, 0.5, 1, 2, 4) is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplier(u8);

impl Multiplier {
    pub const IMMUNE: Multiplier = Multiplier(0);
    pub const QUARTER: Multiplier = Multiplier(1);
    pub const HALF: Multiplier = Multiplier(2);
    pub const NEUTRAL: Multiplier = Multiplier(4);
    pub const DOUBLE: Multiplier = Multiplier(8);
    pub const QUADRUPLE: Multiplier = Multiplier(16);

    pub fn quarters(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 4.0
    }

    /// Parses a value that is exactly one of the legal multipliers.
    pub fn from_f64(value: f64) -> Option<Multiplier> {
        [
            Self::IMMUNE,
            Self::QUARTER,
            Self::HALF,
            Self::NEUTRAL,
            Self::DOUBLE,
            Self::QUADRUPLE,
        ]
        .into_iter()
        .find(|m| m.as_f64() == value)
    }

    pub fn is_immune(self) -> bool {
        self.0 == 0
    }

    pub fn is_super_effective(self) -> bool {
        self.0 >= 8
    }

    /// Floors `value * self`.
    pub fn apply(self, value: u64) -> u64 {
        value * u64::from(self.0) / 4
    }

    fn combine(self, other: Multiplier) -> Multiplier {
        Multiplier(self.0 * other.0 / 4)
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl Serialize for Multiplier {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Multiplier {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        Multiplier::from_f64(value)
            .ok_or_else(|| serde::de::Error::custom(format!("illegal multiplier {value}")))
    }
}

/// The 18×18 attacking-vs-defending effectiveness matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeChart {
    cells: [[Multiplier; TypeId::COUNT]; TypeId::COUNT],
}

impl TypeChart {
    pub fn cell(&self, attacking: TypeId, defending: TypeId) -> Multiplier {
        self.cells[attacking.index()][defending.index()]
    }

    /// Product of the per-type cells. An empty defender list is treated as neutral.
    pub fn multiplier(&self, attacking: TypeId, defending: &[TypeId]) -> Multiplier {
        defending.iter().fold(Multiplier::NEUTRAL, |acc, &d| {
            acc.combine(self.cell(attacking, d))
        })
    }
}

/// Free-function form of [`TypeChart::multiplier`].
pub fn type_multiplier(chart: &TypeChart, attacking: TypeId, defending: &[TypeId]) -> Multiplier {
    chart.multiplier(attacking, defending)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveCategory {
    Physical,
    Special,
    Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatusKind {
    Burn,
    Poison,
    Paralysis,
    Sleep,
    Freeze,
}

impl FromStr for StatusKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Burn" => Ok(StatusKind::Burn),
            "Poison" => Ok(StatusKind::Poison),
            "Paralysis" => Ok(StatusKind::Paralysis),
            "Sleep" => Ok(StatusKind::Sleep),
            "Freeze" => Ok(StatusKind::Freeze),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Accuracy {
    Percent(u8),
    AlwaysHits,
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accuracy::Percent(p) => write!(f, "{p}"),
            Accuracy::AlwaysHits => f.write_str("always hits"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveEffect {
    pub status: StatusKind,
    pub chance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveDef {
    pub name: String,
    pub move_type: TypeId,
    pub category: MoveCategory,
    pub power: u16,
    pub accuracy: Accuracy,
    pub priority: i8,
    pub effect: Option<MoveEffect>,
}

impl MoveDef {
    pub fn is_damaging(&self) -> bool {
        self.category != MoveCategory::Status
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseStats {
    pub hp: u16,
    pub atk: u16,
    pub def: u16,
    pub spa: u16,
    pub spd: u16,
    pub spe: u16,
}

impl BaseStats {
    pub fn total(&self) -> u32 {
        [self.hp, self.atk, self.def, self.spa, self.spd, self.spe]
            .iter()
            .map(|&v| u32::from(v))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Weather {
    Rain,
    Sun,
    Sand,
}

impl fmt::Display for Weather {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weather::Rain => "Rain",
            Weather::Sun => "Sun",
            Weather::Sand => "Sand",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub dex_id: u32,
    pub name: String,
    pub types: Vec<TypeId>,
    pub base_stats: BaseStats,
    pub moves: [MoveDef; 4],
    pub auto_weather: Option<Weather>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dex {
    species: Vec<Species>,
    species_index: HashMap<String, usize>,
    moves: BTreeMap<String, MoveDef>,
    chart: TypeChart,
    pool: Vec<usize>,
    content_hash: u64,
}

impl Dex {
    pub fn bundled() -> Dex {
        Dex::from_json_str(BUNDLED_DEX_JSON).expect("bundled dex is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Dex, DexError> {
        let raw: RawDex =
            serde_json::from_str(text).map_err(|e| DexError::MalformedFile(e.to_string()))?;
        let mut dex = resolve(raw)?;
        dex.content_hash = crate::digest::stable_hash(text.as_bytes());
        Ok(dex)
    }

    pub fn chart(&self) -> &TypeChart {
        &self.chart
    }

    pub fn species(&self, name: &str) -> Option<&Species> {
        self.species_index.get(name).map(|&i| &self.species[i])
    }

    pub fn all_species(&self) -> &[Species] {
        &self.species
    }

    pub fn move_def(&self, name: &str) -> Option<&MoveDef> {
        self.moves.get(name)
    }

    pub fn moves(&self) -> impl Iterator<Item = &MoveDef> {
        self.moves.values()
    }

    /// The draft pool in draft order; positions are the protocol's pick indices.
    pub fn pool(&self) -> Vec<&Species> {
        self.pool.iter().map(|&i| &self.species[i]).collect()
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn pool_entry(&self, index: usize) -> Option<&Species> {
        self.pool.get(index).map(|&i| &self.species[i])
    }

    /// Replaces the draft pool with the named species, in the given order.
    pub fn with_pool<S: AsRef<str>>(&self, names: &[S]) -> Result<Dex, DexError> {
        let mut issues = Vec::new();
        let mut pool = Vec::with_capacity(names.len());
        for name in names {
            match self.species_index.get(name.as_ref()) {
                Some(&i) => pool.push(i),
                None => issues.push(DexIssue::UnknownReference {
                    entry: "pool".into(),
                    reference: name.as_ref().to_string(),
                }),
            }
        }
        if !issues.is_empty() {
            return Err(DexError::Invalid(issues));
        }
        let mut dex = self.clone();
        dex.pool = pool;
        Ok(dex)
    }

    /// Stable hash of the source document, recorded in match logs.
    pub fn content_hash(&self) -> u64 {
        self.content_hash
    }
}

pub fn load_dex(path: impl AsRef<Path>) -> Result<Dex, DexError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DexError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Dex::from_json_str(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DexIssue {
    #[error("{entry}: unknown reference '{reference}'")]
    UnknownReference { entry: String, reference: String },
    #[error("{entry}: {detail}")]
    InvariantViolation { entry: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DexError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed dex file: {0}")]
    MalformedFile(String),
    #[error("{} dex validation error(s):\n{}", .0.len(), render_issues(.0))]
    Invalid(Vec<DexIssue>),
}

fn render_issues(issues: &[DexIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDex {
    types: Vec<String>,
    chart: BTreeMap<String, BTreeMap<String, f64>>,
    moves: Vec<RawMove>,
    species: Vec<RawSpecies>,
    pool: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAccuracy {
    Percent(i64),
    Keyword(String),
}

#[derive(Deserialize)]
struct RawEffect {
    status: String,
    chance: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMove {
    name: String,
    #[serde(rename = "type")]
    move_type: String,
    category: MoveCategory,
    power: i64,
    accuracy: RawAccuracy,
    priority: i64,
    effect: Option<RawEffect>,
}

#[derive(Deserialize)]
struct RawStats {
    hp: i64,
    atk: i64,
    def: i64,
    spa: i64,
    spd: i64,
    spe: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    dex_id: u32,
    name: String,
    types: Vec<String>,
    base_stats: RawStats,
    moves: Vec<String>,
    auto_weather: Option<Weather>,
}

#[derive(Default)]
struct Issues(Vec<DexIssue>);

impl Issues {
    fn unknown(&mut self, entry: impl Into<String>, reference: impl Into<String>) {
        self.0.push(DexIssue::UnknownReference {
            entry: entry.into(),
            reference: reference.into(),
        });
    }

    fn violation(&mut self, entry: impl Into<String>, detail: impl Into<String>) {
        self.0.push(DexIssue::InvariantViolation {
            entry: entry.into(),
            detail: detail.into(),
        });
    }

    fn parse_type(&mut self, entry: &str, name: &str) -> Option<TypeId> {
        match name.parse::<TypeId>() {
            Ok(t) => Some(t),
            Err(_) => {
                self.unknown(entry, name);
                None
            }
        }
    }
}

fn resolve(raw: RawDex) -> Result<Dex, DexError> {
    let mut issues = Issues::default();

    let mut declared = HashSet::new();
    for name in &raw.types {
        if let Some(t) = issues.parse_type("types", name) {
            if !declared.insert(t) {
                issues.violation("types", format!("duplicate type '{name}'"));
            }
        }
    }
    for t in TypeId::ALL {
        if !declared.contains(&t) {
            issues.violation("types", format!("missing type '{t}'"));
        }
    }

    let chart = resolve_chart(&raw.chart, &mut issues);

    let mut moves = BTreeMap::new();
    for m in &raw.moves {
        if let Some(def) = resolve_move(m, &mut issues) {
            if moves.insert(def.name.clone(), def).is_some() {
                issues.violation(format!("move '{}'", m.name), "duplicate move name");
            }
        }
    }

    let mut species = Vec::with_capacity(raw.species.len());
    let mut species_index = HashMap::new();
    for s in &raw.species {
        if let Some(sp) = resolve_species(s, &moves, &mut issues) {
            if species_index.contains_key(&sp.name) {
                issues.violation(format!("species '{}'", s.name), "duplicate species name");
                continue;
            }
            species_index.insert(sp.name.clone(), species.len());
            species.push(sp);
        }
    }

    let mut pool = Vec::with_capacity(raw.pool.len());
    let mut seen = HashSet::new();
    for name in &raw.pool {
        if !seen.insert(name.as_str()) {
            issues.violation("pool", format!("duplicate pool entry '{name}'"));
        }
        match species_index.get(name) {
            Some(&i) => pool.push(i),
            // unresolved names from broken species entries are already reported there
            None if raw.species.iter().any(|s| &s.name == name) => {}
            None => issues.unknown("pool", name.as_str()),
        }
    }
    if raw.pool.is_empty() {
        issues.violation("pool", "pool is empty");
    }

    if !issues.0.is_empty() {
        return Err(DexError::Invalid(issues.0));
    }
    Ok(Dex {
        species,
        species_index,
        moves,
        chart: chart.expect("chart complete when no issues"),
        pool,
        content_hash: 0,
    })
}

fn resolve_chart(
    raw: &BTreeMap<String, BTreeMap<String, f64>>,
    issues: &mut Issues,
) -> Option<TypeChart> {
    let mut cells = [[None; TypeId::COUNT]; TypeId::COUNT];
    for (attacker, row) in raw {
        let Some(a) = issues.parse_type("chart", attacker) else {
            continue;
        };
        for (defender, &value) in row {
            let Some(d) = issues.parse_type(&format!("chart[{attacker}]"), defender) else {
                continue;
            };
            if ![0.0, 0.5, 1.0, 2.0].contains(&value) {
                issues.violation(
                    "chart",
                    format!("illegal multiplier {value} for ({attacker}, {defender})"),
                );
                continue;
            }
            cells[a.index()][d.index()] = Multiplier::from_f64(value);
        }
    }

    let mut complete = true;
    for a in TypeId::ALL {
        for d in TypeId::ALL {
            if cells[a.index()][d.index()].is_none() {
                complete = false;
                issues.violation(
                    "chart",
                    format!("matrix not total: missing cell ({a}, {d})"),
                );
            }
        }
    }
    complete.then(|| TypeChart {
        cells: cells.map(|row| row.map(|c| c.unwrap_or(Multiplier::NEUTRAL))),
    })
}

fn resolve_move(m: &RawMove, issues: &mut Issues) -> Option<MoveDef> {
    let entry = format!("move '{}'", m.name);
    let before = issues.0.len();

    let move_type = issues.parse_type(&entry, &m.move_type);
    match m.category {
        MoveCategory::Status if m.power != 0 => issues.violation(
            &entry,
            format!("Status move must have power 0, got {}", m.power),
        ),
        MoveCategory::Physical | MoveCategory::Special if m.power < 1 => issues.violation(
            &entry,
            format!(
                "{:?} move must have power >= 1, got {}",
                m.category, m.power
            ),
        ),
        _ => {}
    }
    if m.power > i64::from(u16::MAX) {
        issues.violation(&entry, format!("power {} out of range", m.power));
    }
    let accuracy = match &m.accuracy {
        RawAccuracy::Percent(p) if (1..=100).contains(p) => Some(Accuracy::Percent(*p as u8)),
        RawAccuracy::Percent(p) => {
            issues.violation(&entry, format!("accuracy {p} outside 1-100"));
            None
        }
        RawAccuracy::Keyword(k) if k == "AlwaysHits" => Some(Accuracy::AlwaysHits),
        RawAccuracy::Keyword(k) => {
            issues.violation(
                &entry,
                format!("accuracy '{k}' is neither 1-100 nor AlwaysHits"),
            );
            None
        }
    };
    if !(-7..=7).contains(&m.priority) {
        issues.violation(&entry, format!("priority {} outside [-7, 7]", m.priority));
    }
    let effect = match &m.effect {
        None => None,
        Some(e) => {
            if !(0.0..=1.0).contains(&e.chance) {
                issues.violation(&entry, format!("effect chance {} outside [0, 1]", e.chance));
            }
            match e.status.parse::<StatusKind>() {
                Ok(status) => Some(MoveEffect {
                    status,
                    chance: e.chance,
                }),
                Err(name) => {
                    issues.unknown(&entry, name);
                    None
                }
            }
        }
    };

    if issues.0.len() != before {
        return None;
    }
    Some(MoveDef {
        name: m.name.clone(),
        move_type: move_type?,
        category: m.category,
        power: m.power as u16,
        accuracy: accuracy?,
        priority: m.priority as i8,
        effect,
    })
}

fn resolve_species(
    s: &RawSpecies,
    moves: &BTreeMap<String, MoveDef>,
    issues: &mut Issues,
) -> Option<Species> {
    let entry = format!("species '{}'", s.name);
    let before = issues.0.len();

    let types: Vec<TypeId> = s
        .types
        .iter()
        .filter_map(|t| issues.parse_type(&entry, t))
        .collect();
    if s.types.is_empty() || s.types.len() > 2 {
        issues.violation(
            &entry,
            format!("must have 1 or 2 types, got {}", s.types.len()),
        );
    } else if s.types.len() == 2 && s.types[0] == s.types[1] {
        issues.violation(&entry, "dual types must be distinct");
    }

    let raw = &s.base_stats;
    let mut stat = |label: &str, value: i64| -> u16 {
        if !(1..=255).contains(&value) {
            issues.violation(&entry, format!("base {label} {value} outside 1-255"));
        }
        value.clamp(0, 255) as u16
    };
    let base_stats = BaseStats {
        hp: stat("hp", raw.hp),
        atk: stat("atk", raw.atk),
        def: stat("def", raw.def),
        spa: stat("spa", raw.spa),
        spd: stat("spd", raw.spd),
        spe: stat("spe", raw.spe),
    };

    if s.moves.len() != 4 {
        issues.violation(
            &entry,
            format!("must have exactly 4 moves, got {}", s.moves.len()),
        );
    }
    let mut resolved = Vec::with_capacity(4);
    for name in &s.moves {
        match moves.get(name) {
            Some(m) => resolved.push(m.clone()),
            None => issues.unknown(&entry, name.as_str()),
        }
    }

    if issues.0.len() != before {
        return None;
    }
    Some(Species {
        dex_id: s.dex_id,
        name: s.name.clone(),
        types,
        base_stats,
        moves: resolved.try_into().ok()?,
        auto_weather: s.auto_weather,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn bundled_value() -> Value {
        serde_json::from_str(BUNDLED_DEX_JSON).unwrap()
    }

    fn load_value(v: &Value) -> Result<Dex, DexError> {
        Dex::from_json_str(&v.to_string())
    }

    fn issues(err: DexError) -> Vec<DexIssue> {
        match err {
            DexError::Invalid(issues) => issues,
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn bundled_dex_loads() {
        let dex = Dex::bundled();
        assert_eq!(TypeId::ALL.len(), 18);
        assert!(dex.pool_len() >= 30);
        for name in [
            "Swampert",
            "Metagross",
            "Kyogre",
            "Groudon",
            "Rayquaza",
            "Lugia",
            "Ho-Oh",
            "Magnezone",
            "Tyranitar",
            "Blissey",
            "Celebi",
            "Jolteon",
            "Gyarados",
        ] {
            assert!(dex.species(name).is_some(), "{name} missing");
        }
        assert_eq!(
            dex.species("Tyranitar").unwrap().auto_weather,
            Some(Weather::Sand)
        );
        assert_eq!(
            dex.species("Kyogre").unwrap().auto_weather,
            Some(Weather::Rain)
        );
        assert_eq!(
            dex.species("Groudon").unwrap().auto_weather,
            Some(Weather::Sun)
        );
    }

    #[test]
    fn type_names_round_trip() {
        for t in TypeId::ALL {
            assert_eq!(t.to_string().parse::<TypeId>().unwrap(), t);
        }
        assert!("Sound".parse::<TypeId>().is_err());
    }

    #[test]
    fn multiplier_examples() {
        let chart = Dex::bundled().chart().clone();
        use TypeId::*;
        assert_eq!(
            type_multiplier(&chart, Electric, &[Water, Flying]).as_f64(),
            4.0
        );
        assert_eq!(type_multiplier(&chart, Normal, &[Ghost]).as_f64(), 0.0);
        assert_eq!(type_multiplier(&chart, Fire, &[Normal]).as_f64(), 1.0);
        assert_eq!(
            type_multiplier(&chart, Grass, &[Fire, Flying]).as_f64(),
            0.25
        );
    }

    #[test]
    fn misspelled_move_is_unknown_reference() {
        let mut v = bundled_value();
        v["species"][0]["moves"][1] = Value::from("Thunderbolttt");
        let found = issues(load_value(&v).unwrap_err());
        assert!(found.iter().any(|i| matches!(
            i,
            DexIssue::UnknownReference { reference, entry } if reference == "Thunderbolttt" && entry.contains("Gyarados")
        )));
    }

    #[test]
    fn missing_chart_cell_is_reported() {
        let mut v = bundled_value();
        v["chart"]["Steel"].as_object_mut().unwrap().remove("Ghost");
        let found = issues(load_value(&v).unwrap_err());
        assert_eq!(found.len(), 1);
        assert!(found[0].to_string().contains("missing cell (Steel, Ghost)"));
    }

    #[test]
    fn validation_collects_every_error() {
        let mut v = bundled_value();
        v["moves"][0]["power"] = Value::from(0); // Earthquake is Physical
        v["species"][1]["types"] = serde_json::json!(["Water", "Water"]);
        v["species"][2]["base_stats"]["atk"] = Value::from(0);
        v["pool"]
            .as_array_mut()
            .unwrap()
            .push(Value::from("Missingno"));
        let found = issues(load_value(&v).unwrap_err());
        let text: Vec<String> = found.iter().map(|i| i.to_string()).collect();
        assert!(text
            .iter()
            .any(|t| t.contains("Earthquake") && t.contains("power")));
        assert!(text
            .iter()
            .any(|t| t.contains("Swampert") && t.contains("distinct")));
        assert!(text
            .iter()
            .any(|t| t.contains("Metagross") && t.contains("atk")));
        assert!(text.iter().any(|t| t.contains("Missingno")));
    }

    #[test]
    fn syntax_error_is_malformed() {
        assert!(matches!(
            Dex::from_json_str("{\"types\": ["),
            Err(DexError::MalformedFile(_))
        ));
    }

    #[test]
    fn loading_is_deterministic() {
        let a = Dex::bundled();
        let b = Dex::bundled();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a.all_species(), b.all_species());
        assert_eq!(a.chart(), b.chart());
    }

    #[test]
    fn pool_override_resolves_names() {
        let dex = Dex::bundled();
        let small = dex.with_pool(&["Mewtwo", "Blissey"]).unwrap();
        assert_eq!(small.pool_len(), 2);
        assert_eq!(small.pool_entry(1).unwrap().name, "Blissey");
        assert!(dex.with_pool(&["Pikachu"]).is_err());
    }
}
