import logging

from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import status, viewsets
from rest_framework.decorators import action
from rest_framework.filters import OrderingFilter
from rest_framework.response import Response

from .benchmark import run_benchmark
from .exceptions import InvalidInputError, SolverError
from .filters import ReconstructionRunFilter
from .models import ReconstructionRun
from .permissions import HasAPIKeyForWriteOperations
from .serializers import ReconstructionRunSerializer, ReconstructionRunUpdateSerializer

logger = logging.getLogger(__name__)


class ReconstructionRunViewSet(viewsets.ModelViewSet):
    """
    Registry of benchmark runs.

    Listing and retrieval are public. Creating a run renders the requested
    synthetic scene, reconstructs it and stores the angular-error metrics;
    updates only touch the name and notes.
    """

    queryset = ReconstructionRun.objects.all()
    serializer_class = ReconstructionRunSerializer
    filter_backends = [DjangoFilterBackend, OrderingFilter]
    filterset_class = ReconstructionRunFilter
    ordering_fields = ["created_at", "mae_deg", "rmse_deg", "acc_11_25", "grid"]
    # GET is public, POST/PATCH/DELETE require an API key
    permission_classes = [HasAPIKeyForWriteOperations]

    def get_serializer_class(self):
        if self.action in ("update", "partial_update"):
            return ReconstructionRunUpdateSerializer
        return ReconstructionRunSerializer

    def _execute(self, run):
        try:
            return run_benchmark(**run.benchmark_parameters()), None
        except InvalidInputError as exc:
            return None, Response({"detail": str(exc)}, status=status.HTTP_400_BAD_REQUEST)
        except SolverError as exc:
            logger.exception("Benchmark run %r failed", run.name)
            return None, Response(
                {"detail": f"Reconstruction failed: {exc}"},
                status=status.HTTP_500_INTERNAL_SERVER_ERROR,
            )

    def create(self, request, *args, **kwargs):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)

        run = ReconstructionRun(**serializer.validated_data)
        outcome, error = self._execute(run)
        if error is not None:
            return error
        for field, value in outcome.items():
            setattr(run, field, value)
        run.save()

        return Response(self.get_serializer(run).data, status=status.HTTP_201_CREATED)

    # --- Determinism check on a stored run ---
    @action(detail=True, methods=["post"])
    def reproduce(self, request, pk=None):
        """
        Re-execute a stored run with its recorded parameters and report
        whether every metric comes out identical.
        """
        run = self.get_object()
        outcome, error = self._execute(run)
        if error is not None:
            return error

        stored = run.metrics()
        reproduced = {field: outcome[field] for field in stored}
        return Response(
            {
                "id": run.id,
                "identical": stored == reproduced,
                "stored": stored,
                "reproduced": reproduced,
            },
            status=status.HTTP_200_OK,
        )
