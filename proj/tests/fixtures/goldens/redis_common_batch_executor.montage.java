public class RedisCommonBatchExecutor {
    private final Entry entry;
    private final BatchOptions options;
    private static int timeout(ConnectionManager connectionManager, BatchOptions options);
    private static int retryInterval(ConnectionManager connectionManager, BatchOptions options);
    private static int retryAttempts(ConnectionManager connectionManager, BatchOptions options);
    @Override
    protected void sendCommand(CompletableFuture<Void> attemptPromise, RedisConnection connection);
}
