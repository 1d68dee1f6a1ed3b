from rest_framework.routers import DefaultRouter

from .views import ReconstructionRunViewSet

router = DefaultRouter()
router.register(r"runs", ReconstructionRunViewSet, basename="run")

urlpatterns = router.urls
