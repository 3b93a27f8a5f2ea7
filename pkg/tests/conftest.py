import torch

# fixed thread configuration: bit-reproducible runs, and intra-op
# parallelism only adds sync overhead at these tensor sizes
torch.set_num_threads(1)
