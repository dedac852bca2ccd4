# src/core/inference.py

"""
Pasos 2 y 3 de TEPS: relaciones de preferencia por estabilidad en cada clase
de incertidumbre, extensión transitiva y, como referencia, WTT.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from core.economy import UNASSIGNED
from core.errors import CycleError, ValidationError
from core.uncertainty import FeasibleClass, StudentPartition, best_in_rol

Pair = Tuple[int, int]

TAU_TOP = 0
TAU_ALL = 100


@dataclass(frozen=True)
class RelationSet:
    """
    Conjunto de pares (x, y): "x se infiere preferido a y".

    Attributes:
        pairs (FrozenSet[Pair]): Pares ordenados de programas.
        closed (bool): True si el conjunto es transitivamente cerrado.
    """
    pairs: FrozenSet[Pair] = frozenset()
    closed: bool = False

    @classmethod
    def of(cls, pairs: Iterable[Pair], closed: bool = False) -> "RelationSet":
        return cls(pairs=frozenset((int(x), int(y)) for x, y in pairs), closed=closed)

    def __iter__(self) -> Iterator[Pair]:
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def issubset(self, other: "RelationSet") -> bool:
        return self.pairs <= other.pairs

    def programs(self) -> Set[int]:
        return {c for pair in self.pairs for c in pair}


def attention_fraction(tau: Union[int, float, str, Fraction]) -> Fraction:
    """
    Convierte τ ∈ [0, 100] en una fracción exacta τ/100.

    Raises:
        ValidationError: Si τ está fuera de rango.
    """
    value = tau if isinstance(tau, Fraction) else Fraction(str(tau))
    if not 0 <= value <= 100:
        raise ValidationError(f"El parámetro de atención debe estar en [0, 100]; llegó {tau}.")
    return value / 100


def truncate_partition(partition: StudentPartition, tau: Union[int, float, str, Fraction]) -> StudentPartition:
    """
    Conserva la clase más probable y las siguientes mientras la probabilidad
    acumulada no supere τ/100.

    Raises:
        ValidationError: Si la partición está vacía o τ fuera de rango.
    """
    if not partition.classes:
        raise ValidationError("La partición está vacía.")
    limit = attention_fraction(tau)
    kept = [partition.classes[0]]
    cumulative = partition.probability(partition.classes[0])
    for cls in partition.classes[1:]:
        cumulative += partition.probability(cls)
        if cumulative > limit:
            break
        kept.append(cls)
    return StudentPartition(classes=tuple(kept), n_draws=partition.n_draws)


def stability_relations(partition: StudentPartition, rol: Sequence[int],
                        outside: Optional[int] = None) -> List[FrozenSet[Pair]]:
    """
    Relaciones por estabilidad: α_W preferido a cada b ∈ B_W \\ {α_W}.

    Las relaciones se agrupan por programa asignado y los grupos se ordenan
    según la posición de ese programa en el ROL.

    Args:
        partition (StudentPartition): Clases (normalmente ya truncadas).
        rol: ROL enviado por el estudiante.
        outside (int, optional): Id con el que se modela la opción exterior ∅.
            Sin él, las clases sin asignación no generan relaciones.

    Returns:
        List[FrozenSet[Pair]]: Familia ordenada P̃_1..P̃_m.

    Raises:
        ValidationError: Si algún α_W no es el máximo del ROL dentro de B_W.
    """
    rank = {c: position for position, c in enumerate(rol)}
    groups: Dict[int, Set[Pair]] = {}
    for cls in partition.classes:
        expected = best_in_rol(cls.feasible, rol)
        if cls.assigned != expected:
            raise ValidationError(
                f"α_W={cls.assigned} no coincide con el mejor programa factible del ROL ({expected})."
            )
        members = cls.programs()
        if cls.assigned == UNASSIGNED:
            if outside is None:
                continue
            groups.setdefault(outside, set()).update((outside, b) for b in members)
            continue
        pairs = groups.setdefault(cls.assigned, set())
        pairs.update((cls.assigned, b) for b in members if b != cls.assigned)
        if outside is not None:
            pairs.add((cls.assigned, outside))
    ordered = sorted(groups, key=lambda head: rank.get(head, len(rank)))
    return [frozenset(groups[head]) for head in ordered if groups[head]]


def relation_graph(pairs: Iterable[Pair]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_edges_from(pairs)
    return graph


def transitive_closure(relations: Union[RelationSet, Iterable[Pair]]) -> RelationSet:
    """
    Menor superconjunto transitivamente cerrado (alcanzabilidad en el digrafo).

    Raises:
        CycleError: Si las relaciones contienen un ciclo; el error nombra el ciclo.
    """
    pairs = relations.pairs if isinstance(relations, RelationSet) else frozenset(relations)
    graph = relation_graph(pairs)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = [u for u, _ in nx.find_cycle(graph)]
        raise CycleError(cycle)
    closure = nx.transitive_closure_dag(graph)
    return RelationSet.of(closure.edges(), closed=True)


def iterative_tree_merge(family: Sequence[FrozenSet[Pair]]) -> RelationSet:
    """
    Fusión iterativa de la familia ordenada, de P̃_m hacia P̃_1: en cada paso se
    añaden (x, z) cuando (x, y) está en el grupo actual y (y, z) en lo ya fusionado.
    Se conserva como implementación de referencia de `transitive_closure`.
    """
    if not family:
        return RelationSet(closed=True)
    merged: Set[Pair] = set(family[-1])
    for group in reversed(family[:-1]):
        extension = {(x, z) for x, y in group for y2, z in merged if y == y2}
        merged |= set(group) | extension
    return RelationSet.of(merged, closed=True)


def teps_infer(partition: StudentPartition, rol: Sequence[int], tau: Union[int, float, str, Fraction] = TAU_ALL,
               outside: Optional[int] = None) -> RelationSet:
    """TEPS^τ: cierre transitivo de las relaciones por estabilidad en las clases retenidas."""
    family = stability_relations(truncate_partition(partition, tau), rol, outside)
    return transitive_closure(frozenset().union(*family) if family else frozenset())


def wtt_infer(rol: Sequence[int], universe: Iterable[int]) -> RelationSet:
    """
    WTT: los programas listados siguen el orden del ROL y dominan a todos los no listados.

    Raises:
        ValidationError: Si el ROL menciona programas fuera del universo.
    """
    universe = set(int(c) for c in universe)
    missing = [c for c in rol if c not in universe]
    if missing:
        raise ValidationError(f"El ROL contiene programas fuera del universo: {missing}.")
    ranked = list(rol)
    unranked = sorted(universe - set(ranked))
    pairs = [(ranked[a], ranked[b]) for a in range(len(ranked)) for b in range(a + 1, len(ranked))]
    pairs += [(r, u) for r in ranked for u in unranked]
    return RelationSet.of(pairs, closed=True)


def ever_assigned(partition: StudentPartition) -> Set[int]:
    return {cls.assigned for cls in partition.classes if cls.assigned != UNASSIGNED}


def is_consistent_rol(candidate: Sequence[int], relations: RelationSet, assigned_programs: Iterable[int]) -> bool:
    """
    ¿Es `candidate` consistente con las relaciones inferidas?

    (i) todo programa alguna vez asignado aparece en el ROL; (ii) ningún
    programa listado por encima de c se infiere peor que c.
    """
    listed = set(candidate)
    if any(c not in listed for c in assigned_programs):
        return False
    for upper, lower in itertools.combinations(candidate, 2):
        if (lower, upper) in relations:
            return False
    return True


def reassign_partition(partition: StudentPartition, rol: Sequence[int]) -> StudentPartition:
    """Recalcula α_W para otro ROL manteniendo fijos los conjuntos factibles."""
    classes = tuple(
        FeasibleClass(feasible=cls.feasible, assigned=best_in_rol(cls.feasible, rol), count=cls.count)
        for cls in partition.classes
    )
    return StudentPartition(classes=classes, n_draws=partition.n_draws)


def enumerate_consistent_rols(relations: RelationSet, assigned_programs: Iterable[int],
                              programs: Sequence[int]) -> List[Tuple[int, ...]]:
    """Todos los ROLs sobre `programs` consistentes con `relations` (solo para pocos programas)."""
    required = set(assigned_programs)
    optional = [c for c in programs if c not in required]
    consistent = []
    for size in range(len(optional) + 1):
        for extra in itertools.combinations(optional, size):
            for order in itertools.permutations(sorted(required) + list(extra)):
                if is_consistent_rol(order, relations, required):
                    consistent.append(order)
    return consistent
