#!/usr/bin/env python3
"""Generate the bundled desk corpus of atom-mapped reactions.

Forward reaction SMARTS are run over small building-block pools with RDKit.
Product atoms inherit a map number from the reactant atom they came from;
reactant atoms that do not survive into the product stay unmapped (leaving
groups).  Reaction type frequencies are long tailed on purpose.

Only needed when regenerating data/desk_corpus.tsv:

    python3 tools/make_desk_corpus.py > data/desk_corpus.tsv
"""

import argparse
import random
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem

RDLogger.DisableLog("rdApp.*")

ACIDS = [
    "CC(=O)O", "CCC(=O)O", "CC(C)C(=O)O", "OC(=O)c1ccccc1", "OC(=O)c1ccc(Cl)cc1",
    "OC(=O)c1ccc(OC)cc1", "OC(=O)c1cccnc1", "OC(=O)c1ccncc1", "OC(=O)C1CCCCC1",
    "OC(=O)Cc1ccccc1", "OC(=O)c1ccc2ccccc2c1", "OC(=O)c1ccc(F)cc1F", "OC(=O)c1cc(C)on1",
    "OC(=O)c1ccsc1", "OC(=O)c1ccoc1", "OC(=O)C1CC1", "CC(C)(C)OC(=O)N1CCC(CC1)C(=O)O",
    "OC(=O)c1ccc(cc1)C(F)(F)F", "OC(=O)c1cnc2ccccc2c1", "OC(=O)CCc1ccccc1",
    "OC(=O)c1ccc(cc1)-c1ccccc1", "OC(=O)C1CCN(CC1)c1ccccn1", "OC(=O)c1cc2ccccc2[nH]1",
    "COc1cc(cc(OC)c1OC)C(=O)O", "OC(=O)c1ccc(nc1)N1CCOCC1", "OC(=O)C1CCOCC1",
    "OC(=O)c1csc(n1)-c1ccccc1", "OC(=O)[C@@H]1CCCN1C(=O)OC(C)(C)C",
    "Cc1nn(C)c(C)c1C(=O)O", "OC(=O)c1ccc2OCOc2c1",
]

PRIMARY_AMINES = [
    "CN", "CCN", "NCc1ccccc1", "NC1CCCCC1", "NCCc1ccccc1", "Nc1ccccc1", "Nc1ccc(F)cc1",
    "Nc1ccc(OC)cc1", "Nc1cccnc1", "NCc1ccco1", "NCCO", "NCC(F)(F)F", "NC1CC1",
    "NCc1ccc(Cl)cc1", "Nc1ccc2OCOc2c1", "NCCN1CCOCC1", "Nc1ccc(cc1)N1CCOCC1",
    "NC1CCN(CC1)C(=O)OC(C)(C)C", "NCc1cccnc1", "Nc1cnc2ccccc2c1", "NC(C)c1ccccc1",
    "Nc1ccc(cc1)C(F)(F)F", "NCc1ccc2ccccc2c1", "Nc1nccs1", "NCC1CCCO1",
]

SECONDARY_AMINES = [
    "C1CCNCC1", "C1COCCN1", "CNC", "C1CCNC1", "CN1CCNCC1", "CNCc1ccccc1",
    "C1CN(CCN1)c1ccccc1", "OC1CCNCC1", "C1CC2(CCN1)OCCO2", "CC(C)N1CCNCC1",
    "C1CN(CCN1)c1ncccn1", "O=C1CCNCC1", "CNc1ccccc1", "C1CNCC(C1)c1ccccc1",
    "CC(C)(C)OC(=O)N1CCNCC1", "c1ccc2c(c1)CCNC2",
]

ARYL_HALIDES = [
    "Brc1ccccc1", "Brc1ccc(C)cc1", "Brc1ccc(OC)cc1", "Brc1cccnc1", "Brc1ccc(F)cc1",
    "Brc1ccc(cc1)C#N", "Brc1cccc(c1)C(=O)OC", "Brc1ccc2ccccc2c1", "Brc1ccsc1",
    "Brc1cnc2ccccc2c1", "Ic1ccccc1", "Ic1ccc(cc1)C(F)(F)F", "Brc1ccc(nc1)N1CCOCC1",
    "Brc1ccc2OCOc2c1", "Brc1cncnc1", "Brc1ccc(cc1)S(C)(=O)=O", "COc1ccc(Br)cn1",
    "Brc1ccc(cc1)C(=O)N1CCCC1", "Cc1cc(Br)ccc1F", "Brc1ccc2[nH]ccc2c1",
]

BORONIC_ACIDS = [
    "OB(O)c1ccccc1", "OB(O)c1ccc(C)cc1", "OB(O)c1ccc(OC)cc1", "OB(O)c1cccnc1",
    "OB(O)c1ccc(F)cc1", "OB(O)c1ccsc1", "OB(O)c1ccoc1", "OB(O)c1ccc(cc1)C(=O)O",
    "OB(O)c1cccc(c1)C#N", "OB(O)c1cnn(C)c1", "OB(O)c1ccc2ccccc2c1", "OB(O)c1ccc(cc1)N(C)C",
    "OB(O)c1cccc2ccccc12", "OB(O)c1ccc(Cl)cc1Cl",
]

ALKYL_HALIDES = [
    "BrCc1ccccc1", "BrCC", "BrCCC", "BrCc1ccc(F)cc1", "BrCc1ccccn1", "BrCC(=O)OCC",
    "BrCCOC", "BrCC1CC1", "BrCc1ccc(cc1)C#N", "ICC", "BrCCc1ccccc1", "BrCc1cccc(c1)OC",
    "BrCC=C", "BrCc1ccc2ccccc2c1", "BrCC(F)(F)F", "BrCCCN1CCOCC1",
]

ALDEHYDES = [
    "O=Cc1ccccc1", "O=Cc1ccc(F)cc1", "O=Cc1ccncc1", "O=CC1CCCCC1", "O=Cc1ccco1",
    "O=Cc1ccc(OC)cc1", "O=CCC", "O=Cc1cccs1", "O=Cc1ccc2ccccc2c1", "O=Cc1cnn(C)c1",
    "O=Cc1ccc(cc1)N1CCOCC1", "O=CC(C)C",
]

SNAR_ELECTROPHILES = [
    "Fc1ccc(cc1)[N+](=O)[O-]", "Clc1ccccn1", "Clc1ncccn1", "Clc1ccc(cn1)C(F)(F)F",
    "Fc1ccc(cc1F)[N+](=O)[O-]", "Clc1nc2ccccc2s1", "Clc1ccc(nn1)Cl", "Clc1ncc(Br)cn1",
    "Clc1nccc(n1)C", "Fc1ccc(cn1)C#N", "Clc1ccc2ncccc2n1", "Clc1ncnc2[nH]ccc12",
]

ESTERS = [
    "COC(=O)c1ccccc1", "CCOC(=O)c1ccccc1", "COC(=O)c1ccc(Br)cc1", "COC(=O)c1cccnc1",
    "CCOC(=O)C1CCN(CC1)C(=O)OC(C)(C)C", "COC(=O)Cc1ccc(O)cc1", "CCOC(=O)c1cc(C)n(n1)C",
    "COC(=O)c1ccc(cc1)-c1ccccc1", "COC(=O)c1ccc2[nH]ccc2c1", "CCOC(=O)CCc1ccccc1",
    "COC(=O)[C@@H](Cc1ccccc1)NC(=O)OC(C)(C)C", "COC(=O)c1ccc(cc1)N1CCOCC1",
    "CCOC(=O)c1csc(n1)-c1ccccc1", "COC(=O)C1CCCCC1", "COC(=O)c1ccc(OCc2ccccc2)cc1",
]

SULFONYL_CHLORIDES = [
    "CS(=O)(=O)Cl", "Cc1ccc(cc1)S(=O)(=O)Cl", "ClS(=O)(=O)c1ccccc1", "ClS(=O)(=O)c1cccs1",
    "ClS(=O)(=O)c1ccc(F)cc1", "CCS(=O)(=O)Cl", "ClS(=O)(=O)c1ccc(cc1)NC(C)=O",
    "Cn1cnc(c1)S(=O)(=O)Cl",
]

NITRO = [
    "O=[N+]([O-])c1ccccc1", "Cc1ccc(cc1)[N+](=O)[O-]", "O=[N+]([O-])c1ccc(cc1)N1CCOCC1",
    "COC(=O)c1ccc(cc1)[N+](=O)[O-]", "O=[N+]([O-])c1cccnc1", "O=[N+]([O-])c1ccc(F)cc1C",
    "O=[N+]([O-])c1ccc2ccccc2c1", "O=[N+]([O-])c1ccc(cc1)C(=O)N1CCCC1",
    "O=[N+]([O-])c1cc(Cl)ccc1OC", "Cc1cc(ccc1N1CCN(C)CC1)[N+](=O)[O-]",
]

ACID_CHLORIDES = [
    "CC(=O)Cl", "ClC(=O)c1ccccc1", "ClC(=O)c1ccc(Cl)cc1", "ClC(=O)C1CC1", "ClC(=O)c1ccco1",
    "CC(C)C(=O)Cl", "ClC(=O)c1ccc(cc1)[N+](=O)[O-]", "ClC(=O)Cc1ccccc1", "ClC(=O)c1cccs1",
]

PHENOLS = [
    "Oc1ccccc1", "Oc1ccc(F)cc1", "Oc1ccc(cc1)C(=O)OC", "Oc1ccc(cc1)C#N", "Oc1cccnc1",
    "Oc1ccc2ccccc2c1", "COc1ccc(O)cc1", "Oc1ccc(Cl)cc1Cl", "Oc1ccc(cc1)C(C)=O",
]

ISOCYANATES = [
    "O=C=Nc1ccccc1", "O=C=Nc1ccc(Cl)cc1", "CCN=C=O", "O=C=NC1CCCCC1", "O=C=Nc1ccc(F)cc1",
    "O=C=NCc1ccccc1",
]

ALCOHOLS = [
    "CO", "CCO", "OCc1ccccc1", "OCC1CC1", "OC1CCCCC1", "OCCN1CCOCC1", "OCc1ccccn1",
    "OC1CCN(CC1)C(=O)OC(C)(C)C", "OCCc1ccccc1", "CC(C)O", "OCC(F)(F)F",
]

ALKYNES = [
    "C#Cc1ccccc1", "C#CCO", "C#CC1CC1", "C#CC(C)(C)O", "C#Cc1cccnc1", "C#CCN1CCOCC1",
    "C#C[Si](C)(C)C", "C#CCCCC",
]

BOC_AMINES = [
    "CC(C)(C)OC(=O)N1CCN(CC1)c1ccccc1", "CC(C)(C)OC(=O)NCc1ccccc1",
    "CC(C)(C)OC(=O)N1CCC(CC1)Oc1ccccc1", "CC(C)(C)OC(=O)NC1CCCCC1",
    "CC(C)(C)OC(=O)N1CCC(CC1)C(=O)Nc1ccccc1", "CC(C)(C)OC(=O)Nc1ccc(cc1)C(=O)OC",
    "CC(C)(C)OC(=O)N1CCN(CC1)C(=O)c1ccccc1", "CC(C)(C)OC(=O)NCCc1c[nH]c2ccccc12",
    "CC(C)(C)OC(=O)N1CCC[C@H]1C(=O)Nc1ccccc1", "CC(C)(C)OC(=O)N1CC(C1)n1ccnc1",
    "CC(C)(C)OC(=O)N1CCc2ccccc2C1", "CC(C)(C)OC(=O)N1CCC(CC1)c1nc2ccccc2o1",
    "CC(C)(C)OC(=O)NCC(=O)N1CCOCC1", "CC(C)(C)OC(=O)N1CCN(CC1)c1ncccn1",
    "CC(C)(C)OC(=O)NC1CCN(CC1)Cc1ccccc1", "CC(C)(C)OC(=O)N[C@@H](C)C(=O)NCc1ccccc1",
]

CBZ_AMINES = [
    "O=C(OCc1ccccc1)N1CCCCC1", "O=C(NCCc1ccccc1)OCc1ccccc1", "O=C(OCc1ccccc1)N1CCN(CC1)C(C)=O",
    "O=C(NC1CCOCC1)OCc1ccccc1", "O=C(OCc1ccccc1)N1CCC(CC1)C(=O)OC",
]

METHYL_ETHERS = [
    "COc1ccccc1", "COc1ccc(cc1)C(=O)N1CCOCC1", "COc1ccc2ccccc2c1", "COc1cccc(c1)-c1ccccc1",
    "COc1ccc(cc1)C#N", "COc1ccc(Cl)cc1C(=O)O",
]

PRIMARY_ALCOHOLS = [
    "OCc1ccccc1", "OCc1ccc(Cl)cc1", "OCC1CCCCC1", "OCc1cccnc1", "OCCc1ccccc1",
    "OCc1ccc2ccccc2c1", "OCc1ccco1", "OCC1CCN(CC1)C(=O)OC(C)(C)C",
]

KETONES = [
    "CC(=O)c1ccccc1", "O=C1CCCCC1", "CC(=O)c1ccc(F)cc1", "O=C(c1ccccc1)c1ccccc1",
    "CC(=O)c1cccnc1", "O=C1CCN(CC1)C(=O)OC(C)(C)C", "CCC(=O)c1ccc(OC)cc1",
]

NITRILES = [
    "N#Cc1ccccc1", "N#CCc1ccccc1", "N#Cc1ccc(F)cc1", "N#CC1CCCCC1", "N#Cc1cccnc1",
]

THIOLS = ["SCc1ccccc1", "Sc1ccccc1", "Sc1ccc(C)cc1", "SCCO", "Sc1ncccn1"]

TBS_ETHERS = [
    "CC(C)(C)[Si](C)(C)OCc1ccccc1", "CC(C)(C)[Si](C)(C)OCCN1CCOCC1",
    "CC(C)(C)[Si](C)(C)OC1CCN(CC1)C(=O)c1ccccc1", "CC(C)(C)[Si](C)(C)OCC1CCCCC1",
]

BENZYL_ETHERS = [
    "c1ccc(COc2ccccc2)cc1", "OC(=O)c1ccc(OCc2ccccc2)cc1", "c1ccc(COCC2CCCCC2)cc1",
    "CC(=O)c1ccc(OCc2ccccc2)cc1",
]

CHLOROFORMATES = ["ClC(=O)OCC", "ClC(=O)OC", "ClC(=O)OCc1ccccc1", "ClC(=O)Oc1ccccc1"]

NITRO += [
    "O=[N+]([O-])c1ccc(cc1)-c1ccccc1", "O=[N+]([O-])c1ccc(cc1)N1CCCCC1", "O=[N+]([O-])c1ccc(cc1)C(=O)O",
    "O=[N+]([O-])c1cccc(c1)C#N", "O=[N+]([O-])c1ccc(nc1)N1CCOCC1", "O=[N+]([O-])c1ccc(cc1)OCc1ccccc1",
    "O=[N+]([O-])c1ccc2[nH]ccc2c1", "CC(=O)Nc1ccc(cc1)[N+](=O)[O-]", "O=[N+]([O-])c1ccc(cc1)S(C)(=O)=O",
    "CN(C)c1ccc(cc1)[N+](=O)[O-]",
]


def derived(smarts, pool, extra=()):
    """Substrates made by running a one-component SMARTS over a pool."""
    rxn = AllChem.ReactionFromSmarts(smarts)
    out = set()
    for s in pool:
        for products in rxn.RunReactants((Chem.MolFromSmiles(s),) + tuple(Chem.MolFromSmiles(e) for e in extra)):
            p = products[0]
            try:
                Chem.SanitizeMol(p)
            except Exception:
                continue
            out.add(Chem.MolToSmiles(p))
    return sorted(out)


AMINE = "[NX3;H2,H1;!$(N[C,S]=[O,S,N]);!$(N[#6]#*);!$(N-[#7,#8]);!a:{m}]"
ALIPHATIC_AMINE = "[NX3;H2,H1;!$(N[C,S]=[O,S,N]);!$(N-a);!$(N-[#7,#8]);!a:{m}]"
AMINES = PRIMARY_AMINES + SECONDARY_AMINES

BOC_AMINES = sorted(set(BOC_AMINES) | set(derived(
    "[NX3;H2,H1;!$(N[C,S]=[O,S,N]);!a:1]>>CC(C)(C)OC(=O)[N:1]", PRIMARY_AMINES + SECONDARY_AMINES)))
ESTERS = sorted(set(ESTERS) | set(derived("[C:1](=[O:2])[OH1]>>[C:1](=[O:2])OC", ACIDS))
                | set(derived("[C:1](=[O:2])[OH1]>>[C:1](=[O:2])OCC", ACIDS[::2])))

# (name, weight, forward SMARTS, reactant pools)
REACTIONS = [
    ("amide_coupling", 80, "[CX3;!$(C-[#7,#8;!H1]):1](=[O:2])[OX2H1].%s>>[C:1](=[O:2])[N:3]" % AMINE.format(m=3),
     [ACIDS, AMINES]),
    ("boc_deprotection", 45, "[N:1]C(=O)OC(C)(C)C>>[N:1]", [BOC_AMINES]),
    ("suzuki", 40, "[c:1][Br,I].[c:2]B(O)O>>[c:1]-[c:2]", [ARYL_HALIDES, BORONIC_ACIDS]),
    ("n_alkylation", 32, "%s.[CH2:2][Br,I]>>[N:1][C:2]" % ALIPHATIC_AMINE.format(m=1), [AMINES, ALKYL_HALIDES]),
    ("snar", 28, "[c;$(c[n,$(c:c:c[N+](=O)[O-])]):1][F,Cl].%s>>[c:1][N:2]" % AMINE.format(m=2),
     [SNAR_ELECTROPHILES, AMINES]),
    ("ester_hydrolysis", 26, "[C:1](=[O:2])[O:3][CH3,$([CH2][CH3])]>>[C:1](=[O:2])[O:3]", [ESTERS]),
    ("reductive_amination", 24, "[CH1:1](=O)[#6:3].%s>>[C:1]([#6:3])[N:2]" % ALIPHATIC_AMINE.format(m=2),
     [ALDEHYDES, AMINES]),
    ("buchwald", 20, "[c:1][Br,I].%s>>[c:1][N:2]" % ALIPHATIC_AMINE.format(m=2), [ARYL_HALIDES, AMINES]),
    ("sulfonamide", 20, "[S:1](=[O:3])(=[O:4])Cl.%s>>[S:1](=[O:3])(=[O:4])[N:2]" % AMINE.format(m=2),
     [SULFONYL_CHLORIDES, AMINES]),
    ("nitro_reduction", 16, "[c:2][N+:1](=O)[O-]>>[c:2][N+0:1]", [NITRO]),
    ("acyl_chloride_amide", 16, "[C:1](=[O:2])Cl.%s>>[C:1](=[O:2])[N:3]" % AMINE.format(m=3),
     [ACID_CHLORIDES, AMINES]),
    ("williamson", 14, "[c:1][OH1:2].[CH2:3][Br,I]>>[c:1][O:2][C:3]", [PHENOLS, ALKYL_HALIDES]),
    ("urea", 12, "[N:1]=[C:2]=[O:3].%s>>[N:1][C:2](=[O:3])[N:4]" % AMINE.format(m=4), [ISOCYANATES, AMINES]),
    ("esterification", 10, "[CX3:1](=[O:2])[OX2H1].[CX4;!$(C-[!#6;!#1;!#8]):3][OH1:4]>>[C:1](=[O:2])[O:4][C:3]",
     [ACIDS, ALCOHOLS]),
    ("sonogashira", 10, "[c:1][Br,I].[CH1:2]#[C:3]>>[c:1][C:2]#[C:3]", [ARYL_HALIDES, ALKYNES]),
    ("alcohol_oxidation", 8, "[CH2:1]([#6:2])[OH1:3]>>[C:1]([#6:2])=[O:3]", [PRIMARY_ALCOHOLS]),
    ("ketone_reduction", 8, "[#6:2][C:1](=[O:3])[#6:4]>>[#6:2][C:1]([O:3])[#6:4]", [KETONES]),
    ("cbz_deprotection", 6, "[N:1]C(=O)OCc1ccccc1>>[N:1]", [CBZ_AMINES]),
    ("demethylation", 6, "[c:1][O:2][CH3]>>[c:1][O:2]", [METHYL_ETHERS]),
    ("ester_aminolysis", 5, "[C:1](=[O:2])O[CH3].%s>>[C:1](=[O:2])[N:3]" % ALIPHATIC_AMINE.format(m=3),
     [ESTERS, AMINES]),
    ("carbamate", 5, "Cl[C:1](=[O:2])[O:3].%s>>[N:4][C:1](=[O:2])[O:3]" % AMINE.format(m=4),
     [CHLOROFORMATES, AMINES]),
    ("tbs_deprotection", 4, "[C:1][O:2][Si](C)(C)C(C)(C)C>>[C:1][O:2]", [TBS_ETHERS]),
    ("nitrile_reduction", 3, "[C:1]#[N:2]>>[C:1]-[N:2]", [NITRILES]),
    ("benzyl_ether_cleavage", 3, "[#6;!$(C=O):1][O:2][CH2]c1ccccc1>>[#6:1][O:2]", [BENZYL_ETHERS]),
    ("thioether", 3, "[#6:3][SH1:1].[CH2:2][Br,I]>>[#6:3][S:1][C:2]", [THIOLS, ALKYL_HALIDES]),
    ("o_acetylation", 2, "[CH3:4][C:2](=[O:3])Cl.[CX4:5][OH1:1]>>[CH3:4][C:2](=[O:3])[O:1][C:5]",
     [ACID_CHLORIDES, ALCOHOLS]),
    ("mesylation", 2, "[CH3:1][S:2](=[O:3])(=[O:4])Cl.[CX4:6][OH1:5]>>[CH3:1][S:2](=[O:3])(=[O:4])[O:5][C:6]",
     [SULFONYL_CHLORIDES, ALCOHOLS]),
]


def mapped_reaction(reactants, product):
    """Return 'precursors>>product' with maps following product atom order."""
    reactants = [Chem.Mol(r) for r in reactants]
    for r in reactants:
        for a in r.GetAtoms():
            a.SetAtomMapNum(0)
    product = Chem.Mol(product)
    for i, a in enumerate(product.GetAtoms(), start=1):
        props = a.GetPropsAsDict()
        if "react_idx" not in props:
            return None  # atom created by the template
        src = reactants[props["react_idx"]].GetAtomWithIdx(props["react_atom_idx"])
        src.SetAtomMapNum(i)
        a.SetAtomMapNum(i)
    used = [r for r in reactants if any(a.GetAtomMapNum() for a in r.GetAtoms())]
    if len(used) != len(reactants):
        return None
    lhs = ".".join(Chem.MolToSmiles(r) for r in reactants)
    return lhs + ">>" + Chem.MolToSmiles(product)


def run(rxn, reactants, rng):
    outcomes = {}
    for products in rxn.RunReactants(tuple(reactants)):
        p = products[0]
        try:
            Chem.SanitizeMol(p)
        except Exception:
            continue
        if len(Chem.GetMolFrags(p)) != 1:
            continue
        outcomes.setdefault(Chem.MolToSmiles(p), p)
    if not outcomes:
        return None
    key = rng.choice(sorted(outcomes))
    return mapped_reaction(reactants, outcomes[key])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20240917)
    ap.add_argument("--scale", type=float, default=1.15, help="multiplies every reaction-type weight")
    args = ap.parse_args()
    rng = random.Random(args.seed)

    rows = []
    seen_products = set()
    for cls, (name, weight, smarts, pools) in enumerate(REACTIONS, start=1):
        rxn = AllChem.ReactionFromSmarts(smarts)
        mols = [[Chem.MolFromSmiles(s) for s in pool] for pool in pools]
        for pool, src in zip(mols, pools):
            for m, s in zip(pool, src):
                if m is None:
                    sys.exit(f"bad building block {s}")
        target = round(weight * args.scale)
        made = 0
        tries = 0
        while made < target and tries < 200 * target:
            tries += 1
            reactants = [rng.choice(pool) for pool in mols]
            rxn_smiles = run(rxn, reactants, rng)
            if rxn_smiles is None:
                continue
            # one reaction per product keeps the bipartite graph honest
            bare = Chem.MolFromSmiles(rxn_smiles.split(">>")[1])
            for a in bare.GetAtoms():
                a.SetAtomMapNum(0)
            key = Chem.MolToSmiles(bare)
            if key in seen_products:
                continue
            seen_products.add(key)
            rows.append((name, cls, rxn_smiles))
            made += 1
        print(f"{name}: {made}/{target}", file=sys.stderr)

    rng.shuffle(rows)
    for i, (_, cls, smi) in enumerate(rows, start=1):
        print(f"R{i:04d}\t{cls}\t{smi}")


if __name__ == "__main__":
    main()
