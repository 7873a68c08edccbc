use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! vocabulary {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Case-insensitive.
            pub fn parse(s: &str) -> Option<$name> {
                let s = s.trim();
                $(
                    if s.eq_ignore_ascii_case($text) $(|| s.eq_ignore_ascii_case($alias))* {
                        return Some($name::$variant);
                    }
                )+
                None
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                $name::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown {} '{s}'", stringify!($name))))
            }
        }
    };
}

vocabulary! {
    /// The ten entity types of the graph.
    NodeType {
        GeneProtein => "Gene_protein" | "Gene/Protein",
        Disease => "Disease",
        BiologicalProcess => "Biological_process",
        Phenotype => "Phenotype" | "Effect/Phenotype",
        Anatomy => "Anatomy",
        MolecularFunction => "Molecular_function",
        Drug => "Drug",
        CellularComponent => "Cellular_component",
        Pathway => "Pathway",
        Exposure => "Exposure",
    }
}

vocabulary! {
    /// Frozen relation vocabulary. Anything else is an ingest error.
    Relation {
        AnatomyProteinPresent => "ANATOMY_PROTEIN_PRESENT",
        DrugDrug => "DRUG_DRUG",
        AnatomyProteinAbsent => "ANATOMY_PROTEIN_ABSENT",
        PhenotypeProtein => "PHENOTYPE_PROTEIN",
        DiseasePhenotypePositive => "DISEASE_PHENOTYPE_POSITIVE",
        BioprocessProtein => "BIOPROCESS_PROTEIN",
        ProteinProtein => "PROTEIN_PROTEIN",
        CellcompProtein => "CELLCOMP_PROTEIN",
        MolfuncProtein => "MOLFUNC_PROTEIN",
        DrugEffect => "DRUG_EFFECT",
        DiseaseProtein => "DISEASE_PROTEIN",
        PathwayProtein => "PATHWAY_PROTEIN",
        BioprocessBioprocess => "BIOPROCESS_BIOPROCESS",
        DiseaseDisease => "DISEASE_DISEASE",
        DrugProtein => "DRUG_PROTEIN",
        PhenotypePhenotype => "PHENOTYPE_PHENOTYPE",
        Contraindication => "CONTRAINDICATION",
        AnatomyAnatomy => "ANATOMY_ANATOMY",
        MolfuncMolfunc => "MOLFUNC_MOLFUNC",
        Indication => "INDICATION",
        CellcompCellcomp => "CELLCOMP_CELLCOMP",
        ExposureProtein => "EXPOSURE_PROTEIN",
        PathwayPathway => "PATHWAY_PATHWAY",
        ExposureExposure => "EXPOSURE_EXPOSURE",
        ExposureDisease => "EXPOSURE_DISEASE",
        ExposureBioprocess => "EXPOSURE_BIOPROCESS",
        OffLabelUse => "OFF_LABEL_USE",
        DiseasePhenotypeNegative => "DISEASE_PHENOTYPE_NEGATIVE",
        ExposureMolfunc => "EXPOSURE_MOLFUNC",
        ExposureCellcomp => "EXPOSURE_CELLCOMP",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_sizes() {
        assert_eq!(NodeType::ALL.len(), 10);
        assert_eq!(Relation::ALL.len(), 30);
    }

    #[test]
    fn round_trip_names() {
        for &r in Relation::ALL {
            assert_eq!(Relation::parse(r.as_str()), Some(r));
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{r}\""));
        }
        for &t in NodeType::ALL {
            assert_eq!(NodeType::parse(&t.as_str().to_lowercase()), Some(t));
        }
        assert_eq!(NodeType::parse("Gene/Protein"), Some(NodeType::GeneProtein));
        assert_eq!(Relation::parse("FOO"), None);
    }
}
