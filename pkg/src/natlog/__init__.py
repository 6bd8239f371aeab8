"""Natural-logic relation algebra over finite sets, plus neural models
(plain NN and neural tensor network) that learn those relations between
term embeddings, with the data generators, training loop, and taxonomy
ingestion needed to run the simulated-world and WordNet experiments.
"""

from .relations import (
    JOIN_TABLE,
    RELATIONS,
    Relation,
    VacuousSetError,
    converse,
    full_mask,
    join,
    mask_of,
    members_of,
    proper_nonempty_subsets,
    relation_from_token,
    relation_of_sets,
    verify_join_soundness,
)
from .worlds import (
    BooleanStructure,
    InconsistentStatementsError,
    Statement,
    enumerate_statements,
    partition_test,
    provability_closure,
    sample_structure,
    split_statements,
)
from .datasets import (
    LabeledDataset,
    SplitDataset,
    read_labeled_tsv,
    read_split,
    read_statements,
    statements_to_dataset,
    write_labeled_tsv,
    write_split,
    write_statements,
)
from .model import (
    ModelConfig,
    ModelParams,
    backward,
    batch_loss,
    forward,
    forward_batch,
    gradient_check,
    init_params,
    load_checkpoint,
    loss_and_gradients,
    predict,
    predict_batch,
    save_checkpoint,
)
from .train import (
    AdaGrad,
    AggregateReport,
    EvalReport,
    TrainConfig,
    TrainingDivergedError,
    aggregate_runs,
    evaluate,
    train,
)
from .wordnet import (
    FoldPlan,
    TaxonomyGraph,
    TermGraph,
    downsample_coordinates,
    extract_terms,
    generate_pairs,
    load_pretrained_vectors,
    make_folds,
    parse_edge_list,
    parse_taxonomy,
    parse_wndb,
    subsample_pool,
)
from .seeding import substream

__version__ = "0.1.0"
