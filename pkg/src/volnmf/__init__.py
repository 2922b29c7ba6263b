"""Volume-regularized nonnegative matrix factorization."""
