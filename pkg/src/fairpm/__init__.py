"""Fairness-aware process mining: situation tables, C4.5 trees, and
optimal leaf relabeling under a demographic-parity budget."""

from .conformance import (PetriNet, ReplayResult, import_alignment_results,
                          parse_pnml, token_replay)
from .enrichment import (EnrichmentConfig, enrich_conformance,
                         enrich_neighbor_activities, enrich_trace_delay,
                         enrich_trace_duration, enrich_workloads)
from .fairness import (DiscReport, RelabelCandidate, RelabelPlan,
                       apply_relabeling, disc_classifier, disc_data,
                       enumerate_candidates, select_relabeling,
                       select_relabeling_greedy)
from .harness import (ExperimentRow, InjectionSpec, SweepParams,
                      inject_discrimination, run_epsilon_sweep, run_sweep,
                      write_report)
from .log_model import (Event, EventLog, Timestamp, Trace, events_up_to,
                        latest_event_with_activity, parse_csv_log, parse_xes,
                        serialize_xes)
from .situations import (AnnotatedTable, ClassBinarizer, ExtractionPlan,
                         Instance, SensitiveBinarizer, Situation,
                         SituationFeature, SituationSpecification,
                         build_annotated_table, derive_situations,
                         eval_feature, load_specification, split_table)
from .tree import (DecisionTree, Leaf, TreeParams, accuracy, best_split,
                   entropy, export_dot, grow_tree, predict, tree_to_json)

__version__ = "0.1.0"
