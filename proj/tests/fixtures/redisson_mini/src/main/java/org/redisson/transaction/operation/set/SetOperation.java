package org.redisson.transaction.operation.set;

import org.redisson.command.CommandAsyncExecutor;

public abstract class SetOperation {

    protected String name;

    public abstract void commit(CommandAsyncExecutor commandExecutor);

    public abstract void rollback(CommandAsyncExecutor commandExecutor);

    public String getName() {
        return name;
    }
}
