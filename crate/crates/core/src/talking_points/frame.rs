//! The fifteen generic media frames.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MediaFrame {
    Economic,
    CapacityAndResources,
    Morality,
    FairnessAndEquality,
    Legality,
    PolicyPrescription,
    CrimeAndPunishment,
    SecurityAndDefense,
    HealthAndSafety,
    QualityOfLife,
    CulturalIdentity,
    PublicOpinion,
    Political,
    ExternalRegulation,
    Other,
}

impl MediaFrame {
    pub const ALL: [MediaFrame; 15] = [
        MediaFrame::Economic,
        MediaFrame::CapacityAndResources,
        MediaFrame::Morality,
        MediaFrame::FairnessAndEquality,
        MediaFrame::Legality,
        MediaFrame::PolicyPrescription,
        MediaFrame::CrimeAndPunishment,
        MediaFrame::SecurityAndDefense,
        MediaFrame::HealthAndSafety,
        MediaFrame::QualityOfLife,
        MediaFrame::CulturalIdentity,
        MediaFrame::PublicOpinion,
        MediaFrame::Political,
        MediaFrame::ExternalRegulation,
        MediaFrame::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MediaFrame::Economic => "Economic",
            MediaFrame::CapacityAndResources => "Capacity and Resources",
            MediaFrame::Morality => "Morality",
            MediaFrame::FairnessAndEquality => "Fairness and Equality",
            MediaFrame::Legality => "Legality, Constitutionality, Jurisprudence",
            MediaFrame::PolicyPrescription => "Policy Prescription and Evaluation",
            MediaFrame::CrimeAndPunishment => "Crime and Punishment",
            MediaFrame::SecurityAndDefense => "Security and Defense",
            MediaFrame::HealthAndSafety => "Health and Safety",
            MediaFrame::QualityOfLife => "Quality of Life",
            MediaFrame::CulturalIdentity => "Cultural Identity",
            MediaFrame::PublicOpinion => "Public Opinion",
            MediaFrame::Political => "Political",
            MediaFrame::ExternalRegulation => "External Regulation and Reputation",
            MediaFrame::Other => "Other",
        }
    }

    /// Case-insensitive lookup through the alias table. The flag is false when
    /// nothing matched and the frame fell back to `Other`.
    pub fn parse(raw: &str) -> (MediaFrame, bool) {
        let key = squash(raw);
        if key.is_empty() {
            return (MediaFrame::Other, false);
        }
        for f in MediaFrame::ALL {
            if squash(f.name()) == key {
                return (f, true);
            }
        }
        for (alias, f) in ALIASES {
            if squash(alias) == key {
                return (*f, true);
            }
        }
        // any single word of the input that is itself an alias
        for word in raw.split(|c: char| !c.is_alphanumeric()) {
            let w = word.to_lowercase();
            if let Some((_, f)) = ALIASES.iter().find(|(a, _)| !a.contains(' ') && *a == w) {
                return (*f, true);
            }
        }
        (MediaFrame::Other, false)
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

const ALIASES: &[(&str, MediaFrame)] = &[
    ("economic", MediaFrame::Economic),
    ("economics", MediaFrame::Economic),
    ("economy", MediaFrame::Economic),
    ("financial", MediaFrame::Economic),
    ("capacity", MediaFrame::CapacityAndResources),
    ("resources", MediaFrame::CapacityAndResources),
    ("capacity & resources", MediaFrame::CapacityAndResources),
    ("moral", MediaFrame::Morality),
    ("morality", MediaFrame::Morality),
    ("ethics", MediaFrame::Morality),
    ("ethical", MediaFrame::Morality),
    ("fairness", MediaFrame::FairnessAndEquality),
    ("equality", MediaFrame::FairnessAndEquality),
    ("fairness & equality", MediaFrame::FairnessAndEquality),
    ("legality", MediaFrame::Legality),
    ("legal", MediaFrame::Legality),
    ("constitutionality", MediaFrame::Legality),
    ("jurisprudence", MediaFrame::Legality),
    ("law", MediaFrame::Legality),
    ("legality constitutionality and jurisprudence", MediaFrame::Legality),
    ("policy", MediaFrame::PolicyPrescription),
    ("policy prescription", MediaFrame::PolicyPrescription),
    ("policy evaluation", MediaFrame::PolicyPrescription),
    ("crime", MediaFrame::CrimeAndPunishment),
    ("punishment", MediaFrame::CrimeAndPunishment),
    ("crime & punishment", MediaFrame::CrimeAndPunishment),
    ("security", MediaFrame::SecurityAndDefense),
    ("defense", MediaFrame::SecurityAndDefense),
    ("defence", MediaFrame::SecurityAndDefense),
    ("security & defense", MediaFrame::SecurityAndDefense),
    ("security and defence", MediaFrame::SecurityAndDefense),
    ("health", MediaFrame::HealthAndSafety),
    ("safety", MediaFrame::HealthAndSafety),
    ("public health", MediaFrame::HealthAndSafety),
    ("health & safety", MediaFrame::HealthAndSafety),
    ("quality of life", MediaFrame::QualityOfLife),
    ("quality", MediaFrame::QualityOfLife),
    ("culture", MediaFrame::CulturalIdentity),
    ("cultural", MediaFrame::CulturalIdentity),
    ("identity", MediaFrame::CulturalIdentity),
    ("public opinion", MediaFrame::PublicOpinion),
    ("opinion", MediaFrame::PublicOpinion),
    ("public sentiment", MediaFrame::PublicOpinion),
    ("politics", MediaFrame::Political),
    ("political", MediaFrame::Political),
    ("external regulation", MediaFrame::ExternalRegulation),
    ("reputation", MediaFrame::ExternalRegulation),
    ("international", MediaFrame::ExternalRegulation),
    ("international relations", MediaFrame::ExternalRegulation),
    ("other", MediaFrame::Other),
];

impl fmt::Display for MediaFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for MediaFrame {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MediaFrame {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match MediaFrame::parse(&s) {
            (f, true) => Ok(f),
            (_, false) => Err(serde::de::Error::custom(format!("unknown media frame {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_names_round_trip() {
        for f in MediaFrame::ALL {
            assert_eq!(MediaFrame::parse(f.name()), (f, true));
            assert_eq!(MediaFrame::parse(&f.name().to_uppercase()), (f, true));
            let json = serde_json::to_string(&f).unwrap();
            assert_eq!(serde_json::from_str::<MediaFrame>(&json).unwrap(), f);
        }
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(MediaFrame::parse("economics").0, MediaFrame::Economic);
        assert_eq!(MediaFrame::parse("Security & Defence").0, MediaFrame::SecurityAndDefense);
        assert_eq!(MediaFrame::parse("public-health").0, MediaFrame::HealthAndSafety);
        assert_eq!(MediaFrame::parse("the legal angle").0, MediaFrame::Legality);
    }

    #[test]
    fn unknown_falls_back_to_other() {
        assert_eq!(MediaFrame::parse("astrology"), (MediaFrame::Other, false));
        assert_eq!(MediaFrame::parse(""), (MediaFrame::Other, false));
    }
}
